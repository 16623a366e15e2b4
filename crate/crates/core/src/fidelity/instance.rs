use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    sampling_mask, DeblurFidelity, Fidelity, InnerLoop, InpaintFidelity, KernelSpec, MriFidelity, RicianFidelity,
    ScatterFidelity, SisrFidelity,
};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LinearOp, Signal, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Deblur,
    Inpaint,
    Sisr,
    Mri,
    Rician,
    Scatter,
}

impl Problem {
    pub const ALL: [Problem; 6] =
        [Problem::Deblur, Problem::Inpaint, Problem::Sisr, Problem::Mri, Problem::Rician, Problem::Scatter];

    pub fn tag(&self) -> &'static str {
        match self {
            Problem::Deblur => "deblur",
            Problem::Inpaint => "inpaint",
            Problem::Sisr => "sisr",
            Problem::Mri => "mri",
            Problem::Rician => "rician",
            Problem::Scatter => "scatter",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deblur" | "deblurring" => Ok(Problem::Deblur),
            "inpaint" | "inpainting" => Ok(Problem::Inpaint),
            "sisr" | "sr" | "super_resolution" => Ok(Problem::Sisr),
            "mri" => Ok(Problem::Mri),
            "rician" => Ok(Problem::Rician),
            "scatter" | "scattering" => Ok(Problem::Scatter),
            _ => Err(Error::Unknown { kind: "problem", name: s.to_string() }),
        }
    }
}

/// Forward-model and noise settings for [`generate_instance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    /// Fidelity weight `λ`.
    pub lambda: f64,
    /// Measurement noise standard deviation `σ_y`.
    pub noise_std: f64,
    /// Blur kernel (deblur, sisr).
    pub kernel: KernelSpec,
    /// Fraction of pixels hidden (inpaint).
    pub missing: f64,
    /// Downsampling factor (sisr).
    pub factor: usize,
    /// k-space undersampling factor (mri).
    pub acceleration: f64,
    /// Half-width of the fully sampled k-space center (mri).
    pub center: usize,
    /// Number of receivers, `0` meaning half the pixel count (scatter).
    pub measurements: usize,
    /// Seed for masks and random operators (the noise has its own seed).
    pub operator_seed: u64,
    /// Prox inner loop (scatter).
    pub inner: InnerLoop,
}

impl ProblemParams {
    /// Weights and noise levels of the reference experiments.
    pub fn for_problem(problem: Problem) -> Self {
        let base = Self {
            lambda: 1.0,
            noise_std: 0.0,
            kernel: KernelSpec::Gaussian { size: 25, std: 1.6 },
            missing: 0.8,
            factor: 2,
            acceleration: 8.0,
            center: 2,
            measurements: 0,
            operator_seed: 0,
            inner: InnerLoop::default(),
        };
        match problem {
            Problem::Deblur => Self { lambda: 15.0, noise_std: 12.5 / 255.0, ..base },
            Problem::Inpaint => Self { lambda: 5.0, noise_std: 1.0 / 255.0, ..base },
            Problem::Sisr => {
                Self { lambda: 10.0, noise_std: 0.0, kernel: KernelSpec::Gaussian { size: 7, std: 1.0 }, ..base }
            }
            Problem::Mri => Self { lambda: 1.0, noise_std: 1.0 / 255.0, ..base },
            Problem::Rician => Self { lambda: 5e-3, noise_std: 25.5 / 255.0, ..base },
            Problem::Scatter => Self { lambda: 1e5, noise_std: 1e-4, ..base },
        }
    }
}

#[derive(Clone, Debug)]
pub enum Observation {
    Image(Signal),
    Kspace(Spectrum),
}

/// A generated problem: fidelity, raw observation, ground truth and a
/// data-driven starting point.
#[derive(Clone, Debug)]
pub struct Instance {
    pub problem: Problem,
    pub fidelity: Arc<dyn Fidelity>,
    pub observation: Observation,
    pub ground_truth: Signal,
    pub init: Signal,
}

fn noise(len: usize, std: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if std == 0.0 {
        return Ok(vec![0.0; len]);
    }
    let dist = Normal::new(0.0, std).map_err(|e| Error::param("noise_std", e.to_string()))?;
    Ok((0..len).map(|_| dist.sample(rng)).collect())
}

fn add_noise(clean: &Signal, std: f64, rng: &mut ChaCha8Rng) -> Result<Signal> {
    let n = noise(clean.len(), std, rng)?;
    Ok(Signal::from_raw(clean.as_slice().iter().zip(n).map(|(a, b)| a + b).collect(), clean.shape()))
}

/// Smooth positive incident field.
fn incident_field(h: usize, w: usize) -> Signal {
    let data = (0..h * w)
        .map(|k| {
            let (i, j) = ((k / w) as f64 / h as f64, (k % w) as f64 / w as f64);
            1.0 + 0.25 * (std::f64::consts::TAU * (i + 0.5 * j)).cos()
        })
        .collect();
    Signal::from_raw(data, Some((h, w)))
}

pub fn generate_instance(
    problem: Problem,
    phantom: &Signal,
    noise_seed: u64,
    params: &ProblemParams,
) -> Result<Instance> {
    let (h, w) = phantom.require_shape()?;
    if phantom.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::param("phantom", "values must lie in [0, 1]"));
    }
    if !(params.noise_std >= 0.0) {
        return Err(Error::param("noise_std", format!("must be nonnegative, got {}", params.noise_std)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut op_rng = ChaCha8Rng::seed_from_u64(params.operator_seed);
    let x = phantom.clone();
    let (fidelity, observation, init): (Arc<dyn Fidelity>, Observation, Signal) = match problem {
        Problem::Deblur => {
            let kernel = params.kernel.build()?;
            let clean = DeblurFidelity::new(&kernel, Signal::zeros_image(h, w), params.lambda)?;
            let y = add_noise(&clean.operator().apply(&x), params.noise_std, &mut rng)?;
            let f = DeblurFidelity::new(&kernel, y.clone(), params.lambda)?;
            (Arc::new(f), Observation::Image(y.clone()), y)
        }
        Problem::Inpaint => {
            if !(0.0..1.0).contains(&params.missing) {
                return Err(Error::param("missing", format!("must lie in [0, 1), got {}", params.missing)));
            }
            let mask: Vec<f64> =
                (0..h * w).map(|_| if op_rng.random::<f64>() < params.missing { 0.0 } else { 1.0 }).collect();
            let mask = Signal::image(h, w, mask)?;
            let y = add_noise(&x, params.noise_std, &mut rng)?.hadamard(&mask);
            let seen = mask.as_slice().iter().sum::<f64>().max(1.0);
            let fill = y.as_slice().iter().sum::<f64>() / seen;
            let init = y.zip_map(&mask, |v, m| if m == 1.0 { v } else { fill });
            let f = InpaintFidelity::new(mask, y.clone(), params.lambda)?;
            (Arc::new(f), Observation::Image(y), init)
        }
        Problem::Sisr => {
            let s = params.factor;
            if s == 0 || h % s != 0 || w % s != 0 {
                return Err(Error::Shape(format!("{h}x{w} image is not divisible by factor {s}")));
            }
            let kernel = params.kernel.build()?;
            let probe = SisrFidelity::new(&kernel, s, Signal::zeros_image(h / s, w / s), params.lambda)?;
            let y = add_noise(&probe.forward(&x), params.noise_std, &mut rng)?;
            let lw = w / s;
            let init = Signal::from_raw((0..h * w).map(|k| y[(k / w / s) * lw + (k % w) / s]).collect(), Some((h, w)));
            let f = SisrFidelity::new(&kernel, s, y.clone(), params.lambda)?;
            (Arc::new(f), Observation::Image(y), init)
        }
        Problem::Mri => {
            let mask = sampling_mask(h, w, params.acceleration, params.center, params.operator_seed)?;
            let probe = MriFidelity::new(mask.clone(), &Spectrum::zeros(h, w), params.lambda)?;
            let clean = probe.forward(&x);
            let nr = noise(h * w, params.noise_std, &mut rng)?;
            let ni = noise(h * w, params.noise_std, &mut rng)?;
            let data = clean
                .as_slice()
                .iter()
                .zip(nr.iter().zip(&ni))
                .zip(mask.as_slice())
                .map(|((c, (a, b)), m)| (c + Complex64::new(*a, *b)) * m)
                .collect();
            let y = Spectrum::new(h, w, data)?;
            let f = MriFidelity::new(mask, &y, params.lambda)?;
            let init = f.zero_filled();
            (Arc::new(f), Observation::Kspace(y), init)
        }
        Problem::Rician => {
            let nr = noise(h * w, params.noise_std, &mut rng)?;
            let ni = noise(h * w, params.noise_std, &mut rng)?;
            let data = x.as_slice().iter().zip(nr.iter().zip(&ni)).map(|(v, (a, b))| (v + a).hypot(*b)).collect();
            let y = Signal::from_raw(data, Some((h, w)));
            let sigma = if params.noise_std > 0.0 { params.noise_std } else { 1.0 / 255.0 };
            let f = RicianFidelity::new(y.clone(), sigma, params.lambda)?;
            (Arc::new(f), Observation::Image(y.clone()), y)
        }
        Problem::Scatter => {
            let d = h * w;
            let m = if params.measurements == 0 { d / 2 } else { params.measurements };
            let op = Arc::new(DenseMatrix::gaussian(m, d, params.operator_seed));
            let u = incident_field(h, w);
            let y = add_noise(&op.apply(&x.hadamard(&u)), params.noise_std, &mut rng)?;
            let f = ScatterFidelity::new(op.clone(), u.clone(), y.clone(), params.lambda)?.with_inner(params.inner)?;
            let scale = f.operator_norm().powi(2) * u.max_abs().powi(2);
            let init = op.adjoint(&y).hadamard(&u).scale(1.0 / scale).with_shape(Some((h, w)));
            (Arc::new(f), Observation::Image(y), init)
        }
    };
    Ok(Instance { problem, fidelity, observation, ground_truth: x, init })
}
