//! Score-based priors: regularizers `g` with score `S = -∇g`.
//!
//! Every prior reports its smoothness constants (`L_g`, `ρ_g`, `ν`) tagged as
//! exact (closed form, valid on all of `R^d`) or estimated (bounds or sampled
//! values that theory-driven parameter choices should not trust blindly).

mod estimate;
mod gaussian;
mod mixture;
mod softplus;

pub use estimate::{estimate_constants, EstimatedConstants};
pub use gaussian::{GaussianPrior, Precision};
pub use mixture::{MixtureComponent, MixturePrior};
pub use softplus::{SoftplusNet, SoftplusPrior};

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::Signal;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstantKind {
    Exact,
    Estimated,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constant {
    pub value: f64,
    pub kind: ConstantKind,
}

impl Constant {
    pub fn exact(value: f64) -> Self {
        Self { value, kind: ConstantKind::Exact }
    }

    pub fn estimated(value: f64) -> Self {
        Self { value, kind: ConstantKind::Estimated }
    }

    pub fn is_exact(&self) -> bool {
        self.kind == ConstantKind::Exact
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorConstants {
    /// `L_g`: Lipschitz constant of the score.
    pub lipschitz: Constant,
    /// `ρ_g`: Lipschitz constant of the Hessian of `g`.
    pub hessian_lipschitz: Constant,
    /// `ν`: weak-convexity modulus of `g`.
    pub weak_convexity: Constant,
}

pub trait ScorePrior: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// `g(x)`
    fn reg_value(&self, x: &Signal) -> f64;

    /// `S(x) = -∇g(x)`
    fn score(&self, x: &Signal) -> Signal;

    fn constants(&self) -> PriorConstants;

    /// Denoising strength σ, for priors that stand for an MMSE denoiser.
    fn sigma(&self) -> Option<f64> {
        None
    }
}

/// `D_σ(x) = x + σ² S(x)`, the denoiser whose residual is the scaled score.
pub fn mmse_denoiser_from_score(prior: &dyn ScorePrior, x: &Signal) -> Result<Signal> {
    let sigma = prior.sigma().ok_or_else(|| Error::param("sigma", "prior carries no denoising strength"))?;
    Ok(x.axpy(sigma * sigma, &prior.score(x)))
}

/// `S(x) = -(x - D_σ(x)) / σ²`
pub fn score_from_denoiser(x: &Signal, denoised: &Signal, sigma: f64) -> Signal {
    denoised.sub(x).scale(1.0 / (sigma * sigma))
}

/// Prior with `g ≡ 0`.
#[derive(Debug, Clone)]
pub struct ZeroPrior {
    pub dim: usize,
}

impl ScorePrior for ZeroPrior {
    fn dim(&self) -> usize {
        self.dim
    }

    fn reg_value(&self, _x: &Signal) -> f64 {
        0.0
    }

    fn score(&self, x: &Signal) -> Signal {
        Signal::zeros(x.len()).with_shape(x.shape())
    }

    fn constants(&self) -> PriorConstants {
        PriorConstants {
            lipschitz: Constant::exact(0.0),
            hessian_lipschitz: Constant::exact(0.0),
            weak_convexity: Constant::exact(0.0),
        }
    }
}
