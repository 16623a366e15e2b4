use num_complex::Complex64;

use super::{check_step, check_weight, Fidelity, FidelityConstants};
use crate::error::{Error, Result};
use crate::linalg::{register_kernel, Convolution, LinearOp, Signal};

/// `f(x) = (λ/2) ‖k ⊛ x - y‖²` with periodic boundaries.
#[derive(Debug, Clone)]
pub struct DeblurFidelity {
    op: Convolution,
    y: Signal,
    lambda: f64,
    /// `conj(Λ) · F y`
    back_projection: Vec<Complex64>,
    power: Vec<f64>,
}

impl DeblurFidelity {
    /// `kernel` is a small centered kernel; it is registered to the shape of `y`.
    pub fn new(kernel: &Signal, y: Signal, lambda: f64) -> Result<Self> {
        let (h, w) = y.require_shape()?;
        Self::from_registered(&register_kernel(kernel, h, w)?, y, lambda)
    }

    pub fn from_registered(kernel: &Signal, y: Signal, lambda: f64) -> Result<Self> {
        check_weight(lambda)?;
        if kernel.shape() != y.shape() {
            return Err(Error::Shape(format!(
                "kernel shape {:?} does not match observation shape {:?}",
                kernel.shape(),
                y.shape()
            )));
        }
        let op = Convolution::new(kernel)?;
        let fy = op.fft().forward_real(y.as_slice());
        let back_projection = fy.iter().zip(op.spectrum()).map(|(a, l)| l.conj() * a).collect();
        let power = op.spectrum().iter().map(|l| l.norm_sqr()).collect();
        Ok(Self { op, y, lambda, back_projection, power })
    }

    pub fn operator(&self) -> &Convolution {
        &self.op
    }

    pub fn observation(&self) -> &Signal {
        &self.y
    }
}

impl Fidelity for DeblurFidelity {
    fn dim(&self) -> usize {
        self.y.len()
    }

    fn value(&self, x: &Signal) -> f64 {
        0.5 * self.lambda * self.op.apply(x).sub(&self.y).norm_sq()
    }

    fn grad(&self, x: &Signal) -> Signal {
        self.op.adjoint(&self.op.apply(x).sub(&self.y)).scale(self.lambda)
    }

    /// `F⁻¹[(F z + μ conj(Λ) F y) / (1 + μ |Λ|²)]` with `μ = ηλ`.
    fn prox(&self, z: &Signal, eta: f64) -> Result<Signal> {
        check_step(eta)?;
        z.check_len(self.dim())?;
        let mu = eta * self.lambda;
        let fft = self.op.fft();
        let mut spec = fft.forward_real(z.as_slice());
        for ((s, b), p) in spec.iter_mut().zip(&self.back_projection).zip(&self.power) {
            *s = (*s + b * mu) / (1.0 + mu * p);
        }
        Ok(Signal::from_raw(fft.inverse_real(spec), self.y.shape()))
    }

    fn constants(&self) -> FidelityConstants {
        let peak = self.power.iter().cloned().fold(0.0, f64::max);
        FidelityConstants::quadratic(self.lambda * peak, self.lambda)
    }
}
