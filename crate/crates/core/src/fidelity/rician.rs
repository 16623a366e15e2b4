use super::bessel::{bessel_ratio, log_i0};
use super::{check_step, check_weight, Fidelity, FidelityConstants};
use crate::error::{check_dim, Error, Result};
use crate::linalg::Signal;
use crate::priors::Constant;

/// Rician negative log-likelihood
/// `f(x) = λ Σ [x²/(2σ²) - log I0(x y / σ²)]`.
///
/// The product `x y` is clamped at 0 from below, so negative iterates see
/// the quadratic term only.
#[derive(Debug, Clone)]
pub struct RicianFidelity {
    y: Signal,
    sigma: f64,
    lambda: f64,
    inner_max: usize,
}

/// Outcome of the reweighted inner loop.
#[derive(Debug, Clone)]
pub struct IrlReport {
    pub x: Signal,
    /// `‖(x - z)/η + ∇f(x)‖` at exit.
    pub residual: f64,
    pub iterations: usize,
}

pub const DEFAULT_INNER_MAX: usize = 10;

impl RicianFidelity {
    pub fn new(y: Signal, sigma: f64, lambda: f64) -> Result<Self> {
        check_weight(lambda)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", format!("noise level must be positive, got {sigma}")));
        }
        if let Some(i) = y.as_slice().iter().position(|&v| v < 0.0) {
            return Err(Error::param("y", format!("entry {i} is negative")));
        }
        Ok(Self { y, sigma, lambda, inner_max: DEFAULT_INNER_MAX })
    }

    pub fn with_inner_max(mut self, inner_max: usize) -> Self {
        self.inner_max = inner_max.max(1);
        self
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn arg(&self, xi: f64, yi: f64) -> f64 {
        (xi * yi).max(0.0) / (self.sigma * self.sigma)
    }

    /// Reweighted linearization of `-log I0` around the current iterate,
    /// started at `z`:
    /// `x⁺ = (z + ηλ (y/σ²) B(x y/σ²)) / (1 + ηλ/σ²)`.
    pub fn prox_irl1(&self, z: &Signal, eta: f64, inner_max: usize) -> Result<IrlReport> {
        check_step(eta)?;
        check_dim(self.y.len(), z.len())?;
        let s2 = self.sigma * self.sigma;
        let e = eta * self.lambda;
        let denom = 1.0 + e / s2;
        let mut x = z.as_slice().to_vec();
        let mut iterations = 0;
        for _ in 0..inner_max.max(1) {
            iterations += 1;
            let mut change = 0.0f64;
            let mut scale = 0.0f64;
            for ((xi, zi), yi) in x.iter_mut().zip(z.as_slice()).zip(self.y.as_slice()) {
                let b = bessel_ratio(self.arg(*xi, *yi))?;
                let next = (zi + e * (yi / s2) * b) / denom;
                change = change.max((next - *xi).abs());
                scale = scale.max(next.abs());
                *xi = next;
            }
            if change <= 1e-15 * (1.0 + scale) {
                break;
            }
        }
        let x = Signal::from_raw(x, z.shape());
        let residual = super::prox_residual(self, &x, z, eta);
        Ok(IrlReport { x, residual, iterations })
    }
}

impl Fidelity for RicianFidelity {
    fn dim(&self) -> usize {
        self.y.len()
    }

    fn value(&self, x: &Signal) -> f64 {
        let s2 = self.sigma * self.sigma;
        let s: f64 = x
            .as_slice()
            .iter()
            .zip(self.y.as_slice())
            .map(|(xi, yi)| xi * xi / (2.0 * s2) - log_i0(self.arg(*xi, *yi)).expect("nonnegative"))
            .sum();
        self.lambda * s
    }

    fn grad(&self, x: &Signal) -> Signal {
        let s2 = self.sigma * self.sigma;
        let data = x
            .as_slice()
            .iter()
            .zip(self.y.as_slice())
            .map(|(xi, yi)| {
                self.lambda * (xi / s2 - (yi / s2) * bessel_ratio(self.arg(*xi, *yi)).expect("nonnegative"))
            })
            .collect();
        Signal::from_raw(data, x.shape())
    }

    fn prox(&self, z: &Signal, eta: f64) -> Result<Signal> {
        Ok(self.prox_irl1(z, eta, self.inner_max)?.x)
    }

    /// `f'' = λ(1/σ² - (y/σ²)² B')` with `B' ∈ [0, 1/2]`, and `|B''| ≤ 1/4`.
    fn constants(&self) -> FidelityConstants {
        let s2 = self.sigma * self.sigma;
        let ymax = self.y.max_abs();
        let lipschitz = (1.0 / s2).max(ymax * ymax / (2.0 * s2 * s2) - 1.0 / s2);
        FidelityConstants {
            lipschitz: Constant::exact(self.lambda * lipschitz),
            hessian_lipschitz: Constant::exact(self.lambda * 0.25 * ymax.powi(3) / (s2 * s2 * s2)),
            convex: false,
            weight: self.lambda,
        }
    }

    fn prox_tolerance(&self) -> f64 {
        1e-3
    }
}
