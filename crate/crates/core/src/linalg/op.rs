use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Fft2, Signal};
use crate::error::{Error, Result};

/// A linear map `R^d -> R^m` together with its adjoint.
pub trait LinearOp: Send + Sync + fmt::Debug {
    /// `(d, m)`: input and output dimensions.
    fn dims(&self) -> (usize, usize);

    fn apply(&self, x: &Signal) -> Signal;

    fn adjoint(&self, y: &Signal) -> Signal;
}

#[derive(Debug, Clone)]
pub struct Identity {
    pub dim: usize,
}

impl LinearOp for Identity {
    fn dims(&self) -> (usize, usize) {
        (self.dim, self.dim)
    }

    fn apply(&self, x: &Signal) -> Signal {
        x.clone()
    }

    fn adjoint(&self, y: &Signal) -> Signal {
        y.clone()
    }
}

/// Entrywise multiplication by a fixed vector (e.g. a 0/1 mask).
#[derive(Debug, Clone)]
pub struct Diagonal {
    weights: Signal,
}

impl Diagonal {
    pub fn new(weights: Signal) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &Signal {
        &self.weights
    }
}

impl LinearOp for Diagonal {
    fn dims(&self) -> (usize, usize) {
        (self.weights.len(), self.weights.len())
    }

    fn apply(&self, x: &Signal) -> Signal {
        x.hadamard(&self.weights)
    }

    fn adjoint(&self, y: &Signal) -> Signal {
        y.hadamard(&self.weights)
    }
}

/// Circular convolution `A = F* Λ F` with a registered kernel.
#[derive(Debug, Clone)]
pub struct Convolution {
    fft: Fft2,
    spectrum: Vec<Complex64>,
}

impl Convolution {
    /// `kernel` must already be registered at the origin (same shape as the image).
    pub fn new(kernel: &Signal) -> Result<Self> {
        let (h, w) = kernel.require_shape()?;
        let fft = Fft2::new(h, w);
        let spectrum = fft.forward_real(kernel.as_slice());
        Ok(Self { fft, spectrum })
    }

    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    fn filter(&self, x: &Signal, conj: bool) -> Signal {
        let mut xs = self.fft.forward_real(x.as_slice());
        for (a, l) in xs.iter_mut().zip(&self.spectrum) {
            *a *= if conj { l.conj() } else { *l };
        }
        Signal::from_raw(self.fft.inverse_real(xs), Some(self.fft.shape()))
    }
}

impl LinearOp for Convolution {
    fn dims(&self) -> (usize, usize) {
        (self.fft.len(), self.fft.len())
    }

    fn apply(&self, x: &Signal) -> Signal {
        self.filter(x, false)
    }

    fn adjoint(&self, y: &Signal) -> Signal {
        self.filter(y, true)
    }
}

/// Keeps every `factor`-th pixel along both axes (the standard s-downsampling).
#[derive(Debug, Clone)]
pub struct Downsample {
    factor: usize,
    shape: (usize, usize),
}

impl Downsample {
    pub fn new(height: usize, width: usize, factor: usize) -> Result<Self> {
        if factor == 0 || !height.is_multiple_of(factor) || !width.is_multiple_of(factor) {
            return Err(Error::Shape(format!("{height}x{width} image is not divisible by factor {factor}")));
        }
        Ok(Self { factor, shape: (height, width) })
    }

    pub fn low_shape(&self) -> (usize, usize) {
        (self.shape.0 / self.factor, self.shape.1 / self.factor)
    }
}

impl LinearOp for Downsample {
    fn dims(&self) -> (usize, usize) {
        let (lh, lw) = self.low_shape();
        (self.shape.0 * self.shape.1, lh * lw)
    }

    fn apply(&self, x: &Signal) -> Signal {
        let (lh, lw) = self.low_shape();
        let w = self.shape.1;
        let s = self.factor;
        let data =
            (0..lh).flat_map(|i| (0..lw).map(move |j| (i, j))).map(|(i, j)| x.as_slice()[i * s * w + j * s]).collect();
        Signal::from_raw(data, Some((lh, lw)))
    }

    fn adjoint(&self, y: &Signal) -> Signal {
        let (lh, lw) = self.low_shape();
        let (h, w) = self.shape;
        let s = self.factor;
        let mut out = vec![0.0; h * w];
        for i in 0..lh {
            for j in 0..lw {
                out[i * s * w + j * s] = y.as_slice()[i * lw + j];
            }
        }
        Signal::from_raw(out, Some((h, w)))
    }
}

/// Row-major dense `m x d` matrix.
#[derive(Clone)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix({}x{})", self.rows, self.cols)
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Seeded i.i.d. Gaussian entries with variance `1/rows`.
    pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (rows as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect::<Vec<f64>>();
        Self { rows, cols, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl LinearOp for DenseMatrix {
    fn dims(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }

    fn apply(&self, x: &Signal) -> Signal {
        let data = self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum())
            .collect();
        Signal::from_raw(data, None)
    }

    fn adjoint(&self, y: &Signal) -> Signal {
        let mut out = vec![0.0; self.cols];
        for (row, &yi) in self.data.chunks_exact(self.cols).zip(y.as_slice()) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
        Signal::from_raw(out, None)
    }
}

/// `outer ∘ inner`.
#[derive(Debug)]
pub struct Composed<A, B> {
    pub outer: A,
    pub inner: B,
}

impl<A: LinearOp, B: LinearOp> LinearOp for Composed<A, B> {
    fn dims(&self) -> (usize, usize) {
        (self.inner.dims().0, self.outer.dims().1)
    }

    fn apply(&self, x: &Signal) -> Signal {
        self.outer.apply(&self.inner.apply(x))
    }

    fn adjoint(&self, y: &Signal) -> Signal {
        self.inner.adjoint(&self.outer.adjoint(y))
    }
}

fn gaussian_probe(len: usize, rng: &mut ChaCha8Rng) -> Signal {
    Signal::from_raw((0..len).map(|_| StandardNormal.sample(rng)).collect(), None)
}

/// Max over seeded Gaussian probes of `|<Ax,y> - <x,A'y>| / (‖Ax‖‖y‖)`.
pub fn adjoint_check(op: &dyn LinearOp, trials: usize, seed: u64) -> f64 {
    let (d, m) = op.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials.max(1) {
        let x = gaussian_probe(d, &mut rng);
        let y = gaussian_probe(m, &mut rng);
        let ax = op.apply(&x);
        let aty = op.adjoint(&y);
        let denom = ax.norm() * y.norm();
        let defect = (ax.as_slice().iter().zip(y.as_slice()).map(|(a, b)| a * b).sum::<f64>() - x.dot(&aty)).abs();
        if denom > 0.0 {
            worst = worst.max(defect / denom);
        } else {
            worst = worst.max(defect);
        }
    }
    worst
}

/// Power-iteration estimate of the spectral norm `‖A‖`.
pub fn operator_norm(op: &dyn LinearOp, iterations: usize, seed: u64) -> f64 {
    let (d, _) = op.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = gaussian_probe(d, &mut rng);
    let n = v.norm();
    v = v.scale(1.0 / n);
    let mut sigma_sq = 0.0;
    for _ in 0..iterations {
        let w = op.adjoint(&op.apply(&v));
        sigma_sq = w.norm();
        if sigma_sq == 0.0 {
            return 0.0;
        }
        v = w.scale(1.0 / sigma_sq);
    }
    sigma_sq.sqrt()
}
