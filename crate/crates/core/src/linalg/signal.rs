use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};

/// Real-valued vector, optionally carrying a row-major 2-D image shape.
///
/// Checked constructors reject non-finite entries. Arithmetic helpers do not
/// re-check; solvers test [`Signal::is_finite`] on their iterates instead.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    data: Vec<f64>,
    shape: Option<(usize, usize)>,
}

impl Signal {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("signal entry {i} is {}", data[i])));
        }
        Ok(Self { data, shape: None })
    }

    pub fn image(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height * width != data.len() {
            return Err(Error::Shape(format!(
                "{height}x{width} image needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        let mut s = Self::new(data)?;
        s.shape = Some((height, width));
        Ok(s)
    }

    pub fn zeros(len: usize) -> Self {
        Self { data: vec![0.0; len], shape: None }
    }

    pub fn zeros_image(height: usize, width: usize) -> Self {
        Self { data: vec![0.0; height * width], shape: Some((height, width)) }
    }

    pub fn filled(len: usize, value: f64) -> Self {
        Self { data: vec![value; len], shape: None }
    }

    pub(crate) fn from_raw(data: Vec<f64>, shape: Option<(usize, usize)>) -> Self {
        debug_assert!(shape.is_none_or(|(h, w)| h * w == data.len()));
        Self { data, shape }
    }

    /// Same data, new shape. Fails if the shape does not cover the data.
    pub fn reshaped(mut self, height: usize, width: usize) -> Result<Self> {
        if height * width != self.data.len() {
            return Err(Error::Shape(format!("cannot view {} values as {height}x{width}", self.data.len())));
        }
        self.shape = Some((height, width));
        Ok(self)
    }

    pub fn with_shape(mut self, shape: Option<(usize, usize)>) -> Self {
        if let Some((h, w)) = shape {
            assert_eq!(h * w, self.data.len(), "shape does not cover signal");
        }
        self.shape = shape;
        self
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn shape(&self) -> Option<(usize, usize)> {
        self.shape
    }

    pub fn require_shape(&self) -> Result<(usize, usize)> {
        self.shape.ok_or_else(|| Error::Shape("signal carries no 2-D shape".into()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Signal) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn distance(&self, other: &Signal) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Signal {
        Signal::from_raw(self.data.iter().map(|&v| f(v)).collect(), self.shape)
    }

    pub fn zip_map(&self, other: &Signal, f: impl Fn(f64, f64) -> f64) -> Signal {
        debug_assert_eq!(self.len(), other.len());
        Signal::from_raw(self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(), self.shape)
    }

    pub fn add(&self, other: &Signal) -> Signal {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Signal) -> Signal {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, alpha: f64) -> Signal {
        self.map(|v| alpha * v)
    }

    /// `self + alpha * x`
    pub fn axpy(&self, alpha: f64, x: &Signal) -> Signal {
        self.zip_map(x, |a, b| a + alpha * b)
    }

    pub fn hadamard(&self, other: &Signal) -> Signal {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn check_len(&self, expected: usize) -> Result<()> {
        check_dim(expected, self.len())
    }
}

impl std::ops::Index<usize> for Signal {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

/// Complex 2-D array in the (unnormalized) DFT domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    data: Vec<Complex64>,
    shape: (usize, usize),
}

impl Spectrum {
    pub fn new(height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
        if height * width != data.len() {
            return Err(Error::Shape(format!(
                "{height}x{width} spectrum needs {} bins, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self { data, shape: (height, width) })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self { data: vec![Complex64::new(0.0, 0.0); height * width], shape: (height, width) }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }
}

impl std::ops::Index<usize> for Spectrum {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.data[i]
    }
}
