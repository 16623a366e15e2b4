//! Parametric blur kernels, centered on a `size x size` grid and normalized
//! to unit sum.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Signal;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Gaussian { size: usize, std: f64 },
    Uniform { size: usize },
    Motion { size: usize, seed: u64 },
    Delta { size: usize },
}

impl KernelSpec {
    pub fn build(&self) -> Result<Signal> {
        match *self {
            KernelSpec::Gaussian { size, std } => gaussian(size, std),
            KernelSpec::Uniform { size } => uniform(size),
            KernelSpec::Motion { size, seed } => motion(size, seed),
            KernelSpec::Delta { size } => delta(size),
        }
    }

    pub fn size(&self) -> usize {
        match *self {
            KernelSpec::Gaussian { size, .. }
            | KernelSpec::Uniform { size }
            | KernelSpec::Motion { size, .. }
            | KernelSpec::Delta { size } => size,
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// `gaussian:SIZE:STD`, `uniform:SIZE`, `motion:SIZE:SEED`, `delta:SIZE`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Unknown { kind: "kernel", name: s.to_string() };
        let int = |p: &str| p.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["gaussian", n, std] => Ok(KernelSpec::Gaussian { size: int(n)?, std: std.parse().map_err(|_| bad())? }),
            ["uniform", n] => Ok(KernelSpec::Uniform { size: int(n)? }),
            ["motion", n, seed] => Ok(KernelSpec::Motion { size: int(n)?, seed: seed.parse().map_err(|_| bad())? }),
            ["delta", n] => Ok(KernelSpec::Delta { size: int(n)? }),
            _ => Err(bad()),
        }
    }
}

fn check_size(size: usize) -> Result<()> {
    if size == 0 {
        return Err(Error::param("size", "kernel size must be positive"));
    }
    Ok(())
}

fn normalized(size: usize, mut data: Vec<f64>) -> Result<Signal> {
    let total: f64 = data.iter().sum();
    data.iter_mut().for_each(|v| *v /= total);
    Signal::image(size, size, data)
}

pub fn gaussian(size: usize, std: f64) -> Result<Signal> {
    check_size(size)?;
    if !(std > 0.0) {
        return Err(Error::param("std", format!("must be positive, got {std}")));
    }
    let c = (size / 2) as f64;
    let data = (0..size * size)
        .map(|k| {
            let (i, j) = ((k / size) as f64 - c, (k % size) as f64 - c);
            (-(i * i + j * j) / (2.0 * std * std)).exp()
        })
        .collect();
    normalized(size, data)
}

pub fn uniform(size: usize) -> Result<Signal> {
    check_size(size)?;
    normalized(size, vec![1.0; size * size])
}

pub fn delta(size: usize) -> Result<Signal> {
    check_size(size)?;
    let mut data = vec![0.0; size * size];
    data[(size / 2) * size + size / 2] = 1.0;
    Signal::image(size, size, data)
}

/// Nonnegative trace of a seeded random walk with inertia, started at the center.
pub fn motion(size: usize, seed: u64) -> Result<Signal> {
    check_size(size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0.0; size * size];
    let c = (size / 2) as f64;
    let (mut px, mut py) = (c, c);
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (mut vx, mut vy) = (angle.cos(), angle.sin());
    let limit = (size as f64 - 1.0).max(0.0);
    for _ in 0..4 * size {
        let i = py.round() as usize;
        let j = px.round() as usize;
        data[i * size + j] += 1.0;
        vx += rng.random_range(-0.5..0.5);
        vy += rng.random_range(-0.5..0.5);
        let n = (vx * vx + vy * vy).sqrt().max(1e-12);
        vx /= n;
        vy /= n;
        px = (px + 0.5 * vx).clamp(0.0, limit);
        py = (py + 0.5 * vy).clamp(0.0, limit);
    }
    normalized(size, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_have_unit_mass() {
        for k in [gaussian(9, 1.6), uniform(3), delta(5), motion(11, 3)] {
            let k = k.unwrap();
            assert!((k.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(k.as_slice().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn gaussian_is_symmetric() {
        let k = gaussian(7, 1.2).unwrap();
        let s = k.as_slice();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(s[i * 7 + j], s[(6 - i) * 7 + (6 - j)]);
                assert_eq!(s[i * 7 + j], s[j * 7 + i]);
            }
        }
    }

    #[test]
    fn motion_is_seeded() {
        assert_eq!(motion(9, 5).unwrap(), motion(9, 5).unwrap());
        assert_ne!(motion(9, 5).unwrap(), motion(9, 6).unwrap());
    }

    #[test]
    fn parses_tags() {
        assert_eq!("gaussian:9:1.6".parse::<KernelSpec>().unwrap(), KernelSpec::Gaussian { size: 9, std: 1.6 });
        assert_eq!("delta:1".parse::<KernelSpec>().unwrap(), KernelSpec::Delta { size: 1 });
        assert!("box:3".parse::<KernelSpec>().is_err());
    }
}
