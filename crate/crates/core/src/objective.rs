//! Smooth objectives `F` consumed by the continuous-time integrators.

use crate::fidelity::Fidelity;
use crate::linalg::Signal;
use crate::priors::ScorePrior;

pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Signal) -> f64;

    fn grad(&self, x: &Signal) -> Signal;
}

/// `F = f + g`, so `∇F = ∇f - S`.
#[derive(Clone, Copy, Debug)]
pub struct Posterior<'a> {
    pub fidelity: &'a dyn Fidelity,
    pub prior: &'a dyn ScorePrior,
}

impl<'a> Posterior<'a> {
    pub fn new(fidelity: &'a dyn Fidelity, prior: &'a dyn ScorePrior) -> Self {
        Self { fidelity, prior }
    }
}

impl Objective for Posterior<'_> {
    fn dim(&self) -> usize {
        self.fidelity.dim()
    }

    fn value(&self, x: &Signal) -> f64 {
        self.fidelity.value(x) + self.prior.reg_value(x)
    }

    fn grad(&self, x: &Signal) -> Signal {
        self.fidelity.grad(x).sub(&self.prior.score(x))
    }
}

/// Objective given by a pair of closures.
pub struct FnObjective<V, G> {
    pub dim: usize,
    pub value: V,
    pub grad: G,
}

impl<V, G> Objective for FnObjective<V, G>
where
    V: Fn(&Signal) -> f64 + Send + Sync,
    G: Fn(&Signal) -> Signal + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Signal) -> f64 {
        (self.value)(x)
    }

    fn grad(&self, x: &Signal) -> Signal {
        (self.grad)(x)
    }
}

/// `F(x) = ½ Σ c_i x_i²`.
#[derive(Clone, Debug)]
pub struct DiagonalQuadratic {
    pub curvature: Vec<f64>,
}

impl Objective for DiagonalQuadratic {
    fn dim(&self) -> usize {
        self.curvature.len()
    }

    fn value(&self, x: &Signal) -> f64 {
        0.5 * x.as_slice().iter().zip(&self.curvature).map(|(a, c)| c * a * a).sum::<f64>()
    }

    fn grad(&self, x: &Signal) -> Signal {
        Signal::from_raw(x.as_slice().iter().zip(&self.curvature).map(|(a, c)| c * a).collect(), x.shape())
    }
}
