//! Data-fidelity terms `f = λ f₀` with gradients, proximal maps and
//! smoothness constants for the supported inverse problems.

pub mod bessel;
mod deblur;
mod inpaint;
mod instance;
pub mod kernels;
mod mri;
mod rician;
mod scatter;
mod sisr;

pub use deblur::DeblurFidelity;
pub use inpaint::InpaintFidelity;
pub use instance::{generate_instance, Instance, Observation, Problem, ProblemParams};
pub use kernels::KernelSpec;
pub use mri::{sampling_mask, MriFidelity};
pub use rician::{IrlReport, RicianFidelity};
pub use scatter::{InnerLoop, ScatterFidelity};
pub use sisr::SisrFidelity;

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::Signal;
use crate::priors::Constant;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityConstants {
    /// `L_f`
    pub lipschitz: Constant,
    /// `ρ_f`
    pub hessian_lipschitz: Constant,
    pub convex: bool,
    /// `λ`
    pub weight: f64,
}

impl FidelityConstants {
    pub(crate) fn quadratic(lipschitz: f64, weight: f64) -> Self {
        Self { lipschitz: Constant::exact(lipschitz), hessian_lipschitz: Constant::exact(0.0), convex: true, weight }
    }
}

pub trait Fidelity: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &Signal) -> f64;

    fn grad(&self, x: &Signal) -> Signal;

    /// `argmin_x f(x) + ‖x - z‖² / (2η)`
    fn prox(&self, z: &Signal, eta: f64) -> Result<Signal>;

    fn constants(&self) -> FidelityConstants;

    /// Tolerance on the prox optimality residual, relative to `(1 + ‖z‖)/η`.
    fn prox_tolerance(&self) -> f64 {
        1e-8
    }
}

pub(crate) fn check_step(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::param("eta", format!("step must be positive and finite, got {eta}")))
    }
}

pub(crate) fn check_weight(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::param("lambda", format!("weight must be positive, got {lambda}")))
    }
}

pub(crate) fn check_binary(name: &'static str, mask: &[f64]) -> Result<()> {
    match mask.iter().position(|&m| m != 0.0 && m != 1.0) {
        None => Ok(()),
        Some(i) => Err(Error::param(name, format!("entry {i} is {}, expected 0 or 1", mask[i]))),
    }
}

/// `‖(x - z)/η + ∇f(x)‖`
pub fn prox_residual(fid: &dyn Fidelity, x: &Signal, z: &Signal, eta: f64) -> f64 {
    x.sub(z).scale(1.0 / eta).add(&fid.grad(x)).norm()
}

/// `f ≡ 0`.
#[derive(Debug, Clone)]
pub struct ZeroFidelity {
    pub dim: usize,
}

impl Fidelity for ZeroFidelity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &Signal) -> f64 {
        0.0
    }

    fn grad(&self, x: &Signal) -> Signal {
        Signal::zeros(x.len()).with_shape(x.shape())
    }

    fn prox(&self, z: &Signal, eta: f64) -> Result<Signal> {
        check_step(eta)?;
        Ok(z.clone())
    }

    fn constants(&self) -> FidelityConstants {
        FidelityConstants::quadratic(0.0, 1.0)
    }
}
