use num_complex::Complex64;

use super::{check_step, check_weight, Fidelity, FidelityConstants};
use crate::error::{Error, Result};
use crate::linalg::{register_kernel, Convolution, Downsample, LinearOp, Signal};

/// `f(x) = (λ/2) ‖S H x - y‖²`: blur by `H`, then keep every `s`-th pixel.
///
/// The prox uses the aliasing structure of `S` in the Fourier domain: the
/// spectrum of `S v` at a low-resolution bin is the mean of the `s²` aliased
/// high-resolution bins, which makes `S H Hᵀ Sᵀ` diagonal there.
#[derive(Debug, Clone)]
pub struct SisrFidelity {
    blur: Convolution,
    down: Downsample,
    factor: usize,
    y: Signal,
    lambda: f64,
    /// `Hᵀ Sᵀ y`
    back_projection: Signal,
    /// `(1/s²) Σ_a |Λ_a|²` per low-resolution bin.
    alias_power: Vec<f64>,
}

impl SisrFidelity {
    /// `kernel` is a small centered kernel registered at the high resolution
    /// `(s·h, s·w)` where `(h, w)` is the shape of `y`.
    pub fn new(kernel: &Signal, factor: usize, y: Signal, lambda: f64) -> Result<Self> {
        check_weight(lambda)?;
        if factor == 0 {
            return Err(Error::param("factor", "must be at least 1"));
        }
        let (lh, lw) = y.require_shape()?;
        let (h, w) = (lh * factor, lw * factor);
        let blur = Convolution::new(&register_kernel(kernel, h, w)?)?;
        let down = Downsample::new(h, w, factor)?;
        let back_projection = blur.adjoint(&down.adjoint(&y));
        let spec = blur.spectrum();
        let s2 = (factor * factor) as f64;
        let mut alias_power = vec![0.0; lh * lw];
        for i in 0..h {
            for j in 0..w {
                alias_power[(i % lh) * lw + j % lw] += spec[i * w + j].norm_sqr() / s2;
            }
        }
        Ok(Self { blur, down, factor, y, lambda, back_projection, alias_power })
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn high_shape(&self) -> (usize, usize) {
        self.blur.fft().shape()
    }

    /// `S H x`
    pub fn forward(&self, x: &Signal) -> Signal {
        self.down.apply(&self.blur.apply(x))
    }
}

impl Fidelity for SisrFidelity {
    fn dim(&self) -> usize {
        self.blur.fft().len()
    }

    fn value(&self, x: &Signal) -> f64 {
        0.5 * self.lambda * self.forward(x).sub(&self.y).norm_sq()
    }

    fn grad(&self, x: &Signal) -> Signal {
        let r = self.forward(x).sub(&self.y);
        self.blur.adjoint(&self.down.adjoint(&r)).scale(self.lambda)
    }

    /// Woodbury: `x = r - μ Hᵀ Sᵀ (I + μ S H Hᵀ Sᵀ)⁻¹ S H r`, `r = z + μ Hᵀ Sᵀ y`.
    fn prox(&self, z: &Signal, eta: f64) -> Result<Signal> {
        check_step(eta)?;
        z.check_len(self.dim())?;
        let mu = eta * self.lambda;
        let (h, w) = self.high_shape();
        let (lh, lw) = self.y.shape().expect("shaped observation");
        let s2 = (self.factor * self.factor) as f64;
        let fft = self.blur.fft();
        let lambda_spec = self.blur.spectrum();
        let r = z.axpy(mu, &self.back_projection);
        let mut rs = fft.forward_real(r.as_slice());
        let mut q = vec![Complex64::new(0.0, 0.0); lh * lw];
        for i in 0..h {
            for j in 0..w {
                q[(i % lh) * lw + j % lw] += lambda_spec[i * w + j] * rs[i * w + j] / s2;
            }
        }
        for (qk, p) in q.iter_mut().zip(&self.alias_power) {
            *qk /= 1.0 + mu * p;
        }
        for i in 0..h {
            for j in 0..w {
                let k = i * w + j;
                rs[k] -= lambda_spec[k].conj() * q[(i % lh) * lw + j % lw] * mu;
            }
        }
        Ok(Signal::from_raw(fft.inverse_real(rs), Some((h, w))))
    }

    fn constants(&self) -> FidelityConstants {
        let peak = self.alias_power.iter().cloned().fold(0.0, f64::max);
        FidelityConstants::quadratic(self.lambda * peak, self.lambda)
    }
}
