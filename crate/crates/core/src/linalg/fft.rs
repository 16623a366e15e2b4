//! 2-D discrete Fourier transform and circular convolution.
//!
//! Convention: the forward transform is unnormalized and the inverse carries
//! the `1/d` factor, so `idft2(dft2(s)) == s` and `‖dft2(s)‖² = d‖s‖²`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Signal, Spectrum};
use crate::error::{Error, Result};

/// Precomputed row/column plans for one image shape.
#[derive(Clone)]
pub struct Fft2 {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fft2({}x{})", self.height, self.width)
    }
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "empty transform");
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn transform(&self, buf: &mut [Complex64], rows: &dyn Fft<f64>, cols: &dyn Fft<f64>) {
        let (h, w) = (self.height, self.width);
        assert_eq!(buf.len(), h * w);
        rows.process(buf);
        let mut t = vec![Complex64::new(0.0, 0.0); h * w];
        for i in 0..h {
            for j in 0..w {
                t[j * h + i] = buf[i * w + j];
            }
        }
        cols.process(&mut t);
        for j in 0..w {
            for i in 0..h {
                buf[i * w + j] = t[j * h + i];
            }
        }
    }

    /// In-place unnormalized forward transform of a row-major buffer.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, self.row_fwd.as_ref(), self.col_fwd.as_ref());
    }

    /// In-place inverse transform including the `1/d` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, self.row_inv.as_ref(), self.col_inv.as_ref());
        let scale = 1.0 / self.len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }

    pub fn forward_real(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse_real(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut spec);
        spec.into_iter().map(|c| c.re).collect()
    }
}

pub fn dft2(s: &Signal) -> Result<Spectrum> {
    let (h, w) = s.require_shape()?;
    let fft = Fft2::new(h, w);
    Spectrum::new(h, w, fft.forward_real(s.as_slice()))
}

/// Complex inverse of [`dft2`].
pub fn idft2(spec: &Spectrum) -> Vec<Complex64> {
    let (h, w) = spec.shape();
    let mut buf = spec.as_slice().to_vec();
    Fft2::new(h, w).inverse(&mut buf);
    buf
}

/// Real part of the inverse transform, shaped like the spectrum.
pub fn idft2_real(spec: &Spectrum) -> Signal {
    let (h, w) = spec.shape();
    Signal::from_raw(idft2(spec).into_iter().map(|c| c.re).collect(), Some((h, w)))
}

/// Circular convolution of two same-shape images; `kernel` must already be
/// registered at the index origin (see [`register_kernel`]).
pub fn circ_conv(s: &Signal, kernel: &Signal) -> Result<Signal> {
    let shape = s.require_shape()?;
    if kernel.shape() != Some(shape) {
        return Err(Error::Shape(format!("kernel shape {:?} does not match image shape {:?}", kernel.shape(), shape)));
    }
    let fft = Fft2::new(shape.0, shape.1);
    let ks = fft.forward_real(kernel.as_slice());
    let mut xs = fft.forward_real(s.as_slice());
    xs.iter_mut().zip(&ks).for_each(|(a, b)| *a *= b);
    Ok(Signal::from_raw(fft.inverse_real(xs), Some(shape)))
}

/// Zero-pads a small centered kernel to `height x width` and rolls its center
/// to index (0, 0). Symmetric kernels then have real spectra.
pub fn register_kernel(kernel: &Signal, height: usize, width: usize) -> Result<Signal> {
    let (kh, kw) = kernel.require_shape()?;
    if kh > height || kw > width {
        return Err(Error::Shape(format!("kernel {kh}x{kw} larger than image {height}x{width}")));
    }
    let (ci, cj) = (kh / 2, kw / 2);
    let mut out = vec![0.0; height * width];
    for i in 0..kh {
        for j in 0..kw {
            let r = (i + height - ci) % height;
            let c = (j + width - cj) % width;
            out[r * width + c] += kernel.as_slice()[i * kw + j];
        }
    }
    Ok(Signal::from_raw(out, Some((height, width))))
}
