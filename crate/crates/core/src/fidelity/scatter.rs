use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_step, check_weight, Fidelity, FidelityConstants};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{operator_norm, LinearOp, Signal};
use crate::priors::Constant;

/// Controls of the gradient-descent inner loop that approximates the prox.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerLoop {
    pub max_iter: usize,
    /// Stop once `‖∇L‖² ≤ tol`.
    pub tol: f64,
    /// Requested step; `None` means `400/(λη)`. Always capped at `1/(L_f + 1/η)`.
    pub gamma: Option<f64>,
}

impl Default for InnerLoop {
    fn default() -> Self {
        Self { max_iter: 100, tol: 2e-3, gamma: None }
    }
}

const RETRIES: usize = 6;
const RISES: usize = 3;
const NORM_SAFETY: f64 = 1.05;

/// Linear inverse scattering under the first Born approximation:
/// `f(x) = (λ/2) ‖H(u ⊙ x) - y‖²`.
#[derive(Debug, Clone)]
pub struct ScatterFidelity {
    h: Arc<dyn LinearOp>,
    u: Signal,
    y: Signal,
    lambda: f64,
    inner: InnerLoop,
    h_norm: f64,
}

impl ScatterFidelity {
    pub fn new(h: Arc<dyn LinearOp>, u: Signal, y: Signal, lambda: f64) -> Result<Self> {
        check_weight(lambda)?;
        let (d, m) = h.dims();
        check_dim(d, u.len())?;
        check_dim(m, y.len())?;
        let h_norm = operator_norm(h.as_ref(), 100, 0);
        Ok(Self { h, u, y, lambda, inner: InnerLoop::default(), h_norm })
    }

    pub fn with_inner(mut self, inner: InnerLoop) -> Result<Self> {
        if inner.max_iter == 0 || !(inner.tol > 0.0) || inner.gamma.is_some_and(|g| !(g > 0.0)) {
            return Err(Error::param("inner", format!("invalid inner-loop controls {inner:?}")));
        }
        self.inner = inner;
        Ok(self)
    }

    pub fn operator(&self) -> &dyn LinearOp {
        self.h.as_ref()
    }

    pub fn field(&self) -> &Signal {
        &self.u
    }

    /// Power-iteration estimate of `‖H‖`.
    pub fn operator_norm(&self) -> f64 {
        self.h_norm
    }

    fn lipschitz(&self) -> f64 {
        let umax = self.u.max_abs();
        self.lambda * self.h_norm * self.h_norm * umax * umax
    }

    fn residual(&self, x: &Signal) -> Signal {
        self.h.apply(&x.hadamard(&self.u)).sub(&self.y)
    }

    fn descend(&self, z: &Signal, eta: f64, step: f64) -> Option<Signal> {
        let objective = |x: &Signal| self.value(x) + x.distance(z).powi(2) / (2.0 * eta);
        let mut x = z.clone();
        let mut prev = objective(&x);
        let mut rises = 0;
        for _ in 0..self.inner.max_iter {
            let g = self.grad(&x).axpy(1.0 / eta, &x.sub(z));
            if g.norm_sq() <= self.inner.tol {
                break;
            }
            x = x.axpy(-step, &g);
            let obj = objective(&x);
            if !obj.is_finite() {
                return None;
            }
            rises = if obj > prev { rises + 1 } else { 0 };
            if rises >= RISES {
                return None;
            }
            prev = obj;
        }
        Some(x)
    }
}

impl Fidelity for ScatterFidelity {
    fn dim(&self) -> usize {
        self.u.len()
    }

    fn value(&self, x: &Signal) -> f64 {
        0.5 * self.lambda * self.residual(x).norm_sq()
    }

    fn grad(&self, x: &Signal) -> Signal {
        self.h.adjoint(&self.residual(x)).hadamard(&self.u).scale(self.lambda).with_shape(x.shape())
    }

    /// Gradient descent on `f(x) + ‖x - z‖²/(2η)` from `x⁰ = z`; halves the
    /// step and retries whenever the objective rises three times in a row.
    fn prox(&self, z: &Signal, eta: f64) -> Result<Signal> {
        check_step(eta)?;
        z.check_len(self.dim())?;
        let gamma = self.inner.gamma.unwrap_or(400.0 / (self.lambda * eta));
        let mut step = gamma.min(1.0 / (NORM_SAFETY * self.lipschitz() + 1.0 / eta));
        for _ in 0..RETRIES {
            if let Some(x) = self.descend(z, eta, step) {
                return Ok(x);
            }
            log::warn!("scatter prox inner loop diverged at step {step:e}, halving");
            step *= 0.5;
        }
        Err(Error::InnerDivergence(format!("no stable step after {RETRIES} halvings (last {step:e})")))
    }

    fn constants(&self) -> FidelityConstants {
        FidelityConstants {
            lipschitz: Constant::estimated(self.lipschitz()),
            hessian_lipschitz: Constant::exact(0.0),
            convex: true,
            weight: self.lambda,
        }
    }

    fn prox_tolerance(&self) -> f64 {
        1e-3
    }
}
