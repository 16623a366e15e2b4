use num_complex::Complex64;

use super::{Constant, PriorConstants, ScorePrior};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{Fft2, Signal};

/// Symmetric PSD precision operator, diagonal either in the pixel basis or
/// in the DFT basis.
#[derive(Debug, Clone)]
pub enum Precision {
    Diagonal(Vec<f64>),
    /// Eigenvalues per DFT bin of an `(h, w)` image; must satisfy
    /// `p[k] = p[-k]` so that real inputs map to real outputs.
    Fourier {
        eigenvalues: Vec<f64>,
        shape: (usize, usize),
    },
}

impl Precision {
    fn eigenvalues(&self) -> &[f64] {
        match self {
            Precision::Diagonal(p) => p,
            Precision::Fourier { eigenvalues, .. } => eigenvalues,
        }
    }
}

/// Quadratic prior `g(x) = ½⟨x-μ, P(x-μ)⟩`, optionally smoothed by Gaussian
/// noise of strength σ (precision becomes `P (I + σ²P)⁻¹`).
#[derive(Debug, Clone)]
pub struct GaussianPrior {
    mean: Signal,
    eigenvalues: Vec<f64>,
    fourier: Option<Fft2>,
    sigma: Option<f64>,
}

impl GaussianPrior {
    pub fn new(mean: Signal, precision: Precision, sigma: Option<f64>) -> Result<Self> {
        let d = mean.len();
        let raw = precision.eigenvalues();
        check_dim(d, raw.len())?;
        if let Some(i) = raw.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::param("precision", format!("eigenvalue {i} is {}", raw[i])));
        }
        if let Some(s) = sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param("sigma", format!("must be positive, got {s}")));
            }
        }
        let fourier = match &precision {
            Precision::Diagonal(_) => None,
            Precision::Fourier { eigenvalues, shape: (h, w) } => {
                let (h, w) = (*h, *w);
                check_dim(d, h * w)?;
                for k1 in 0..h {
                    for k2 in 0..w {
                        let mirror = ((h - k1) % h) * w + (w - k2) % w;
                        if eigenvalues[k1 * w + k2] != eigenvalues[mirror] {
                            return Err(Error::param("precision", "DFT eigenvalues must be symmetric under k -> -k"));
                        }
                    }
                }
                Some(Fft2::new(h, w))
            }
        };
        let s2 = sigma.map_or(0.0, |s| s * s);
        let eigenvalues = raw.iter().map(|p| p / (1.0 + s2 * p)).collect();
        Ok(Self { mean, eigenvalues, fourier, sigma })
    }

    /// `N(μ, s² I)`: isotropic precision `1/s²`.
    pub fn isotropic(mean: Signal, variance: f64, sigma: Option<f64>) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::param("variance", format!("must be positive, got {variance}")));
        }
        let d = mean.len();
        Self::new(mean, Precision::Diagonal(vec![1.0 / variance; d]), sigma)
    }

    pub fn mean(&self) -> &Signal {
        &self.mean
    }

    /// Effective (post-smoothing) precision eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn is_fourier(&self) -> bool {
        self.fourier.is_some()
    }

    /// `P v`
    pub fn apply_precision(&self, v: &Signal) -> Signal {
        match &self.fourier {
            None => {
                Signal::from_raw(v.as_slice().iter().zip(&self.eigenvalues).map(|(a, p)| a * p).collect(), v.shape())
            }
            Some(fft) => {
                let mut spec = fft.forward_real(v.as_slice());
                for (c, p) in spec.iter_mut().zip(&self.eigenvalues) {
                    *c *= Complex64::new(*p, 0.0);
                }
                Signal::from_raw(fft.inverse_real(spec), v.shape())
            }
        }
    }
}

impl ScorePrior for GaussianPrior {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn reg_value(&self, x: &Signal) -> f64 {
        let r = x.sub(&self.mean);
        0.5 * r.dot(&self.apply_precision(&r))
    }

    fn score(&self, x: &Signal) -> Signal {
        self.apply_precision(&x.sub(&self.mean)).scale(-1.0).with_shape(x.shape())
    }

    fn constants(&self) -> PriorConstants {
        let lmax = self.eigenvalues.iter().cloned().fold(0.0, f64::max);
        PriorConstants {
            lipschitz: Constant::exact(lmax),
            hessian_lipschitz: Constant::exact(0.0),
            weak_convexity: Constant::exact(0.0),
        }
    }

    fn sigma(&self) -> Option<f64> {
        self.sigma
    }
}
