//! Reference hyperparameters and the synthetic benchmark family.

use std::path::PathBuf;
use std::sync::Arc;

use super::config::{ExperimentSpec, PhantomKind, PhantomSpec, PriorSpec, ProblemSpec, SolverEntry, SPEC_VERSION};
use super::phantom::blobs;
use super::run::build_prior;
use crate::error::{Error, Result};
use crate::fidelity::{kernels, DeblurFidelity, Fidelity, Problem, ProblemParams};
use crate::linalg::Signal;
use crate::priors::ScorePrior;
use crate::solvers::{Algorithm, SolverConfig};

/// One row of the reference hyperparameter table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PresetRow {
    pub key: &'static str,
    pub problem: Problem,
    pub lambda: f64,
    /// Prior smoothing level `σ`.
    pub sigma: f64,
    pub red_gm_step: f64,
    pub red_prox_step: f64,
    pub risp_gm_step: f64,
    pub risp_prox_step: f64,
    pub inertia: f64,
    pub restart_budget: f64,
    /// MRI acceleration factor.
    pub acceleration: Option<f64>,
}

impl PresetRow {
    pub fn step(&self, alg: Algorithm) -> f64 {
        match alg {
            Algorithm::RedGm => self.red_gm_step,
            Algorithm::RedProx => self.red_prox_step,
            Algorithm::RispGm => self.risp_gm_step,
            Algorithm::RispProx => self.risp_prox_step,
        }
    }

    /// Practical-mode configuration of `alg` with budget `max_iter`.
    pub fn config(&self, alg: Algorithm, max_iter: usize) -> SolverConfig {
        let cfg = SolverConfig::new(self.step(alg), max_iter);
        if alg.is_risp() {
            cfg.with_inertia(self.inertia, self.restart_budget)
        } else {
            cfg
        }
    }
}

#[allow(clippy::too_many_arguments)]
const fn row(
    key: &'static str,
    problem: Problem,
    lambda: f64,
    sigma: f64,
    steps: [f64; 4],
    inertia: f64,
    restart_budget: f64,
    acceleration: Option<f64>,
) -> PresetRow {
    PresetRow {
        key,
        problem,
        lambda,
        sigma,
        red_gm_step: steps[0],
        red_prox_step: steps[1],
        risp_gm_step: steps[2],
        risp_prox_step: steps[3],
        inertia,
        restart_budget,
        acceleration,
    }
}

pub const PRESETS: [PresetRow; 8] = [
    row("deblur", Problem::Deblur, 15.0, 0.1, [0.1, 2.0, 0.07, 5.0], 0.2, 5000.0, None),
    row("inpaint", Problem::Inpaint, 5.0, 0.08, [0.1, 5.0, 0.1, 5.0], 0.2, 5000.0, None),
    row("mri_x4", Problem::Mri, 1.0, 0.01, [0.7, 1.0, 0.4, 1.0], 0.2, 5000.0, Some(4.0)),
    row("mri_x8", Problem::Mri, 1.0, 0.02, [0.7, 1.0, 0.4, 1.0], 0.2, 5000.0, Some(8.0)),
    row("sisr", Problem::Sisr, 10.0, 0.03, [0.4, 10.0, 0.4, 10.0], 0.2, 5000.0, None),
    row("rician", Problem::Rician, 5e-3, 0.05, [0.03, 5e-4, 0.03, 5e-4], 0.01, 100.0, None),
    row("scatter_1024", Problem::Scatter, 1e5, 0.03, [4e-3, 5e-3, 4e-3, 5e-3], 0.01, 5e5, None),
    row("scatter_512", Problem::Scatter, 2e5, 0.03, [2e-4, 5e-3, 2e-4, 5e-3], 0.01, 5000.0, None),
];

pub fn preset(key: &str) -> Result<&'static PresetRow> {
    PRESETS.iter().find(|p| p.key == key).ok_or_else(|| Error::Unknown { kind: "preset", name: key.to_string() })
}

/// Spec running the four solvers with a preset's settings on a seeded blobs
/// phantom and a mixture prior at the preset's `σ`.
pub fn preset_spec(key: &str, size: usize, max_iter: usize) -> Result<ExperimentSpec> {
    let p = preset(key)?;
    let mut problem = ProblemSpec::new(p.problem);
    problem.lambda = Some(p.lambda);
    problem.acceleration = p.acceleration;
    if p.problem == Problem::Deblur {
        problem.kernel = Some("gaussian:9:1.6".into());
    }
    Ok(ExperimentSpec {
        spec_version: SPEC_VERSION,
        name: Some(key.to_string()),
        seed: 0,
        instances: 1,
        output_dir: PathBuf::from(format!("results/{key}")),
        grad_target: 1e-3,
        problem,
        phantom: PhantomSpec::generated(PhantomKind::Blobs, size, size, 1),
        prior: PriorSpec::Mixture {
            components: 3,
            variance: BenchmarkParams::default().variance,
            sigma: p.sigma,
            seed: 100,
            mean_kind: PhantomKind::Blobs,
        },
        solvers: Algorithm::ALL.iter().map(|&a| SolverEntry::new(a.name(), a, &p.config(a, max_iter))).collect(),
    })
}

/// Settings of the deblurring-plus-mixture benchmark family.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkParams {
    pub size: usize,
    pub kernel_size: usize,
    pub kernel_std: f64,
    pub lambda: f64,
    pub noise_std: f64,
    pub components: usize,
    /// Component variance `s²`.
    pub variance: f64,
    pub sigma: f64,
    /// Seed of the first mixture mean.
    pub mean_seed: u64,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        Self {
            size: 32,
            kernel_size: 9,
            kernel_std: 1.6,
            lambda: 15.0,
            noise_std: ProblemParams::for_problem(Problem::Deblur).noise_std,
            components: 3,
            variance: 0.5,
            sigma: 0.1,
            mean_seed: 100,
        }
    }
}

impl BenchmarkParams {
    pub fn prior_spec(&self) -> PriorSpec {
        PriorSpec::Mixture {
            components: self.components,
            variance: self.variance,
            sigma: self.sigma,
            seed: self.mean_seed,
            mean_kind: PhantomKind::Blobs,
        }
    }
}

/// One member of the benchmark family: a nonconvex posterior with exact
/// smoothness constant and positive Hessian-Lipschitz constant.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub fidelity: Arc<DeblurFidelity>,
    pub prior: Arc<dyn ScorePrior>,
    pub ground_truth: Signal,
    pub init: Signal,
}

impl Benchmark {
    /// `L_f + L_g`
    pub fn lipschitz(&self) -> f64 {
        self.fidelity.constants().lipschitz.value + self.prior.constants().lipschitz.value
    }
}

pub fn benchmark_family(seed: u64) -> Result<Benchmark> {
    benchmark_with(&BenchmarkParams::default(), seed)
}

/// Ground truth is a blobs phantom seeded by `seed`; the noise uses the same
/// seed. The prior does not depend on `seed`.
pub fn benchmark_with(params: &BenchmarkParams, seed: u64) -> Result<Benchmark> {
    let n = params.size;
    let truth = blobs(n, n, 6, seed)?;
    let kernel = kernels::gaussian(params.kernel_size, params.kernel_std)?;
    let spec = ProblemParams {
        lambda: params.lambda,
        noise_std: params.noise_std,
        kernel: kernels::KernelSpec::Gaussian { size: params.kernel_size, std: params.kernel_std },
        ..ProblemParams::for_problem(Problem::Deblur)
    };
    let inst = crate::fidelity::generate_instance(Problem::Deblur, &truth, seed, &spec)?;
    let y = inst.init.clone();
    let fidelity = Arc::new(DeblurFidelity::new(&kernel, y.clone(), params.lambda)?);
    let prior = build_prior(&params.prior_spec(), n, n)?;
    Ok(Benchmark { fidelity, prior, ground_truth: truth, init: y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{parse_spec, spec_to_string};

    #[test]
    fn deblur_row_values() {
        let p = preset("deblur").unwrap();
        assert_eq!((p.lambda, p.sigma, p.risp_gm_step, p.inertia, p.restart_budget), (15.0, 0.1, 0.07, 0.2, 5000.0));
    }

    #[test]
    fn preset_specs_parse() {
        for p in PRESETS {
            let spec = preset_spec(p.key, 16, 10).unwrap();
            assert_eq!(parse_spec(&spec_to_string(&spec).unwrap()).unwrap(), spec);
        }
    }

    #[test]
    fn benchmark_is_seeded() {
        let a = benchmark_family(1).unwrap();
        let b = benchmark_family(1).unwrap();
        assert_eq!(a.init, b.init);
        assert_eq!(a.init.len(), 1024);
        assert!(a.prior.constants().hessian_lipschitz.value > 0.0);
    }
}
