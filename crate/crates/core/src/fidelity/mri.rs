use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_binary, check_step, check_weight, Fidelity, FidelityConstants};
use crate::error::{Error, Result};
use crate::linalg::{Fft2, Signal, Spectrum};

/// `f(x) = (λ/2) ‖M F_u x - y‖²` with `F_u = F/√d` the unitary DFT, `M` a
/// binary k-space sampling mask and `y` complex k-space data.
///
/// The mask must be symmetric under `k -> -k`; then `F_uᴴ M F_u` is real and
/// the prox over real images is the real part of the complex prox.
#[derive(Debug, Clone)]
pub struct MriFidelity {
    fft: Fft2,
    mask: Signal,
    /// `√d · M y`, matching the unnormalized forward transform.
    data: Vec<Complex64>,
    lambda: f64,
}

fn mirror(i: usize, j: usize, h: usize, w: usize) -> usize {
    ((h - i) % h) * w + (w - j) % w
}

impl MriFidelity {
    pub fn new(mask: Signal, y: &Spectrum, lambda: f64) -> Result<Self> {
        check_weight(lambda)?;
        let (h, w) = mask.require_shape()?;
        if y.shape() != (h, w) {
            return Err(Error::Shape(format!("mask {h}x{w} does not match k-space data {:?}", y.shape())));
        }
        check_binary("mask", mask.as_slice())?;
        let m = mask.as_slice();
        for i in 0..h {
            for j in 0..w {
                if m[i * w + j] != m[mirror(i, j, h, w)] {
                    return Err(Error::param("mask", "sampling mask must be symmetric under k -> -k"));
                }
            }
        }
        let root = ((h * w) as f64).sqrt();
        let data = y.as_slice().iter().zip(m).map(|(v, mk)| v * (mk * root)).collect();
        Ok(Self { fft: Fft2::new(h, w), mask, data, lambda })
    }

    pub fn mask(&self) -> &Signal {
        &self.mask
    }

    /// `M F_u x`
    pub fn forward(&self, x: &Signal) -> Spectrum {
        let (h, w) = self.fft.shape();
        let root = (self.fft.len() as f64).sqrt();
        let spec = self
            .fft
            .forward_real(x.as_slice())
            .into_iter()
            .zip(self.mask.as_slice())
            .map(|(v, m)| v * (m / root))
            .collect();
        Spectrum::new(h, w, spec).expect("shape")
    }

    /// `Re F_uᴴ y`, the zero-filled reconstruction.
    pub fn zero_filled(&self) -> Signal {
        Signal::from_raw(self.fft.inverse_real(self.data.clone()), Some(self.fft.shape()))
    }
}

impl Fidelity for MriFidelity {
    fn dim(&self) -> usize {
        self.fft.len()
    }

    fn value(&self, x: &Signal) -> f64 {
        let d = self.fft.len() as f64;
        let s: f64 = self
            .fft
            .forward_real(x.as_slice())
            .iter()
            .zip(&self.data)
            .zip(self.mask.as_slice())
            .map(|((v, y), m)| m * (v - y).norm_sqr())
            .sum();
        0.5 * self.lambda * s / d
    }

    fn grad(&self, x: &Signal) -> Signal {
        let spec = self
            .fft
            .forward_real(x.as_slice())
            .into_iter()
            .zip(&self.data)
            .zip(self.mask.as_slice())
            .map(|((v, y), m)| (v - y) * *m)
            .collect();
        Signal::from_raw(self.fft.inverse_real(spec), Some(self.fft.shape())).scale(self.lambda)
    }

    fn prox(&self, z: &Signal, eta: f64) -> Result<Signal> {
        check_step(eta)?;
        z.check_len(self.dim())?;
        let mu = eta * self.lambda;
        let spec = self
            .fft
            .forward_real(z.as_slice())
            .into_iter()
            .zip(&self.data)
            .zip(self.mask.as_slice())
            .map(|((v, y), m)| if *m == 1.0 { (v + y * mu) / (1.0 + mu) } else { v })
            .collect();
        Ok(Signal::from_raw(self.fft.inverse_real(spec), Some(self.fft.shape())))
    }

    fn constants(&self) -> FidelityConstants {
        let any = self.mask.as_slice().contains(&1.0);
        FidelityConstants::quadratic(if any { self.lambda } else { 0.0 }, self.lambda)
    }
}

/// Symmetric random k-space mask keeping each frequency pair with probability
/// `1/acceleration`, plus a fully sampled low-frequency square of half-width
/// `center`.
pub fn sampling_mask(height: usize, width: usize, acceleration: f64, center: usize, seed: u64) -> Result<Signal> {
    if !(acceleration >= 1.0) {
        return Err(Error::param("acceleration", format!("must be at least 1, got {acceleration}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = vec![0.0; height * width];
    let p = 1.0 / acceleration;
    for i in 0..height {
        for j in 0..width {
            let k = i * width + j;
            let mk = mirror(i, j, height, width);
            if mk < k {
                m[k] = m[mk];
                continue;
            }
            let fi = i.min(height - i);
            let fj = j.min(width - j);
            let keep = (fi <= center && fj <= center) || rng.random::<f64>() < p;
            m[k] = if keep { 1.0 } else { 0.0 };
        }
    }
    Signal::image(height, width, m)
}
