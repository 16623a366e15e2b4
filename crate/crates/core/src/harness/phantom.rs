use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::PhantomKind;
use crate::error::{Error, Result};
use crate::linalg::{Fft2, Signal};

pub const DEFAULT_BLOBS: usize = 6;

/// Seeded synthetic test image with values in `[0, 1]`.
pub fn make_phantom(kind: PhantomKind, height: usize, width: usize, seed: u64) -> Result<Signal> {
    match kind {
        PhantomKind::Blobs => blobs(height, width, DEFAULT_BLOBS, seed),
        PhantomKind::Checkerboard => checkerboard(height, width, seed),
        PhantomKind::SmoothRandom => smooth_random(height, width, seed),
        PhantomKind::File => Err(Error::param("kind", "file phantoms are read, not generated")),
    }
}

fn check_size(height: usize, width: usize) -> Result<()> {
    if height < 4 || width < 4 {
        return Err(Error::Shape(format!("phantoms need at least 4x4 pixels, got {height}x{width}")));
    }
    Ok(())
}

fn clamp(data: Vec<f64>, h: usize, w: usize) -> Signal {
    Signal::from_raw(data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(), Some((h, w)))
}

/// Sum of `components` Gaussian bumps with seeded centers, widths and heights.
pub fn blobs(height: usize, width: usize, components: usize, seed: u64) -> Result<Signal> {
    check_size(height, width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = height.min(width) as f64;
    let bumps: Vec<(f64, f64, f64, f64)> = (0..components)
        .map(|_| {
            (
                rng.random_range(0.0..height as f64),
                rng.random_range(0.0..width as f64),
                rng.random_range(scale / 16.0..scale / 4.0),
                rng.random_range(0.3..0.9),
            )
        })
        .collect();
    let mut data = vec![0.0; height * width];
    for (k, v) in data.iter_mut().enumerate() {
        let (i, j) = ((k / width) as f64, (k % width) as f64);
        *v = bumps
            .iter()
            .map(|&(ci, cj, s, a)| a * (-((i - ci).powi(2) + (j - cj).powi(2)) / (2.0 * s * s)).exp())
            .sum();
    }
    Ok(clamp(data, height, width))
}

/// Squares of seeded size and contrast, softened by a circular 3x3 box filter.
pub fn checkerboard(height: usize, width: usize, seed: u64) -> Result<Signal> {
    check_size(height, width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cell = (height.min(width) / rng.random_range(2..=4)).max(2);
    let (lo, hi) = (rng.random_range(0.1..0.3), rng.random_range(0.7..0.9));
    let raw: Vec<f64> = (0..height * width)
        .map(|k| if ((k / width) / cell + (k % width) / cell).is_multiple_of(2) { lo } else { hi })
        .collect();
    let mut data = vec![0.0; height * width];
    for i in 0..height {
        for j in 0..width {
            let mut acc = 0.0;
            for di in [height - 1, 0, 1] {
                for dj in [width - 1, 0, 1] {
                    acc += raw[((i + di) % height) * width + (j + dj) % width];
                }
            }
            data[i * width + j] = acc / 9.0;
        }
    }
    Ok(clamp(data, height, width))
}

/// White noise low-passed with a Gaussian transfer function, then min-max
/// normalized.
pub fn smooth_random(height: usize, width: usize, seed: u64) -> Result<Signal> {
    check_size(height, width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..height * width).map(|_| StandardNormal.sample(&mut rng)).collect();
    let fft = Fft2::new(height, width);
    let mut spec = fft.forward_real(&noise);
    let cutoff = 0.08;
    for (k, c) in spec.iter_mut().enumerate() {
        let fi = freq(k / width, height);
        let fj = freq(k % width, width);
        *c *= Complex64::from((-(fi * fi + fj * fj) / (2.0 * cutoff * cutoff)).exp());
    }
    let smooth = fft.inverse_real(spec);
    let (min, max) = smooth.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if max > min { max - min } else { 1.0 };
    Ok(clamp(smooth.iter().map(|v| (v - min) / span).collect(), height, width))
}

fn freq(k: usize, n: usize) -> f64 {
    let k = if 2 * k > n { k as f64 - n as f64 } else { k as f64 };
    k / n as f64
}
