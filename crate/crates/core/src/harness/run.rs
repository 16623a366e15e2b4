use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::config::{save_spec, ExperimentSpec, PhantomKind, PhantomSpec, PriorSpec};
use super::pgm::{read_graymap, write_graymap};
use super::phantom::{blobs, make_phantom, DEFAULT_BLOBS};
use super::trace_io::{format_float, save_trace};
use crate::diagnostics::{fd_gradient_check, psnr, FD_STEP};
use crate::error::{Error, Result};
use crate::fidelity::{generate_instance, Instance};
use crate::linalg::Signal;
use crate::priors::{GaussianPrior, MixtureComponent, MixturePrior, ScorePrior, SoftplusNet, SoftplusPrior, ZeroPrior};
use crate::solvers::{run_solver, RunTrace};

fn generated(kind: PhantomKind, h: usize, w: usize, seed: u64, components: Option<usize>) -> Result<Signal> {
    match kind {
        PhantomKind::Blobs => blobs(h, w, components.unwrap_or(DEFAULT_BLOBS), seed),
        other => make_phantom(other, h, w, seed),
    }
}

/// Relative graymap paths resolve against `base`.
pub fn load_phantom(spec: &PhantomSpec, base: Option<&Path>) -> Result<Signal> {
    match spec.kind {
        PhantomKind::File => {
            let path = spec.path.as_ref().ok_or_else(|| Error::MissingField { line: 0, field: "path".into() })?;
            let path = match base {
                Some(b) if path.is_relative() => b.join(path),
                _ => path.clone(),
            };
            read_graymap(path)
        }
        kind => {
            let need = |v: Option<usize>, f: &str| v.ok_or_else(|| Error::MissingField { line: 0, field: f.into() });
            let seed = spec.seed.ok_or_else(|| Error::MissingField { line: 0, field: "seed".into() })?;
            generated(kind, need(spec.height, "height")?, need(spec.width, "width")?, seed, spec.components)
        }
    }
}

pub fn build_prior(spec: &PriorSpec, height: usize, width: usize) -> Result<Arc<dyn ScorePrior>> {
    let d = height * width;
    Ok(match *spec {
        PriorSpec::Zero => Arc::new(ZeroPrior { dim: d }),
        PriorSpec::Gaussian { mean, variance, sigma } => Arc::new(GaussianPrior::isotropic(
            Signal::filled(d, mean).with_shape(Some((height, width))),
            variance,
            sigma,
        )?),
        PriorSpec::Mixture { components, variance, sigma, seed, mean_kind } => {
            if components == 0 {
                return Err(Error::param("components", "mixture needs at least one component"));
            }
            if mean_kind == PhantomKind::File {
                return Err(Error::param("mean_kind", "mixture means must be generated"));
            }
            let weight = 1.0 / components as f64;
            let comps = (0..components as u64)
                .map(|i| {
                    Ok(MixtureComponent {
                        weight,
                        mean: generated(mean_kind, height, width, seed + i, None)?,
                        variance,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Arc::new(MixturePrior::new(comps, sigma)?)
        }
        PriorSpec::Softplus { width: hidden, sigma, seed } => {
            Arc::new(SoftplusPrior::new(SoftplusNet::seeded(d, hidden, seed), sigma)?)
        }
    })
}

/// Instance `index` of the spec; its noise seed is `seed + index`.
pub fn build_instance(spec: &ExperimentSpec, index: usize, base: Option<&Path>) -> Result<Instance> {
    let phantom = load_phantom(&spec.phantom, base)?;
    generate_instance(spec.problem.kind, &phantom, spec.seed + index as u64, &spec.problem.params()?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    Diverged,
    Failed,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Diverged => "diverged",
            RunStatus::Failed => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub solver: String,
    pub algorithm: String,
    pub instance: usize,
    pub status: RunStatus,
    pub iterations: usize,
    pub restarts: usize,
    /// PSNR of the last trace row.
    pub final_psnr: Option<f64>,
    /// PSNR of the returned output.
    pub output_psnr: Option<f64>,
    pub iters_to_target: Option<usize>,
    pub min_grad_norm: f64,
    pub final_objective: f64,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub trace_paths: Vec<PathBuf>,
    pub image_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub rows: Vec<SummaryRow>,
}

impl ExperimentReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.status == RunStatus::Ok)
    }
}

struct JobOutput {
    row: SummaryRow,
    trace: Option<PathBuf>,
    image: Option<PathBuf>,
}

fn summarize(
    name: &str,
    instance: usize,
    trace: &RunTrace,
    truth: &Signal,
    target: f64,
    status: RunStatus,
) -> SummaryRow {
    let last = trace.last();
    SummaryRow {
        solver: name.to_string(),
        algorithm: trace.algorithm.to_string(),
        instance,
        status,
        iterations: last.global_iter,
        restarts: trace.restarts,
        final_psnr: last.psnr,
        output_psnr: psnr(&trace.output, truth, 1.0).ok(),
        iters_to_target: trace.iterations_to(target),
        min_grad_norm: trace.min_grad_norm(),
        final_objective: last.objective,
        message: String::new(),
    }
}

fn run_job(
    spec: &ExperimentSpec,
    inst: &Instance,
    prior: &dyn ScorePrior,
    index: usize,
    solver: usize,
) -> Result<JobOutput> {
    let entry = &spec.solvers[solver];
    let stem = format!("{}_i{index}", entry.name);
    let trace_path = spec.output_dir.join(format!("{stem}.csv"));
    let image_path = spec.output_dir.join(format!("{stem}.pgm"));
    let result = run_solver(
        entry.algorithm,
        inst.fidelity.as_ref(),
        prior,
        &entry.config(),
        &inst.init,
        Some(&inst.ground_truth),
    );
    let (trace, status, message) = match result {
        Ok(t) => (Some(t), RunStatus::Ok, String::new()),
        Err(Error::Diverged(t)) => (Some(*t), RunStatus::Diverged, "non-finite iterate".to_string()),
        Err(e @ Error::InnerDivergence(_)) => (None, RunStatus::Diverged, e.to_string()),
        Err(e) => (None, RunStatus::Failed, e.to_string()),
    };
    let Some(trace) = trace else {
        log::error!("{stem}: {message}");
        let row = SummaryRow {
            solver: entry.name.clone(),
            algorithm: entry.algorithm.to_string(),
            instance: index,
            status,
            iterations: 0,
            restarts: 0,
            final_psnr: None,
            output_psnr: None,
            iters_to_target: None,
            min_grad_norm: f64::NAN,
            final_objective: f64::NAN,
            message,
        };
        return Ok(JobOutput { row, trace: None, image: None });
    };
    save_trace(&trace, &trace_path)?;
    let mut row = summarize(&entry.name, index, &trace, &inst.ground_truth, spec.grad_target, status);
    row.message = message;
    let image = if status == RunStatus::Ok {
        let shaped = trace.output.clone().with_shape(inst.ground_truth.shape());
        write_graymap(&shaped, &image_path)?;
        Some(image_path)
    } else {
        log::error!("{stem}: diverged after {} iterations", trace.evaluations);
        None
    };
    Ok(JobOutput { row, trace: Some(trace_path), image })
}

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let io = |e: csv::Error| Error::TraceFormat(e.to_string());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(io)?;
    w.write_record([
        "solver",
        "algorithm",
        "instance",
        "status",
        "iterations",
        "restarts",
        "final_psnr",
        "output_psnr",
        "iters_to_target",
        "min_grad_norm",
        "final_objective",
        "message",
    ])
    .map_err(io)?;
    for r in rows {
        w.write_record([
            r.solver.clone(),
            r.algorithm.clone(),
            r.instance.to_string(),
            r.status.as_str().to_string(),
            r.iterations.to_string(),
            r.restarts.to_string(),
            opt(r.final_psnr),
            opt(r.output_psnr),
            r.iters_to_target.map(|k| k.to_string()).unwrap_or_default(),
            format_float(r.min_grad_norm),
            format_float(r.final_objective),
            r.message.clone(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every solver on every instance, writing one trace and one graymap per
/// pair plus `summary.csv` (and a copy of the spec) into the output
/// directory. Pairs run on a pool of `threads` workers; divergence is
/// reported in the summary rather than aborting the batch.
pub fn run_experiment(spec: &ExperimentSpec, threads: Option<usize>, base: Option<&Path>) -> Result<ExperimentReport> {
    std::fs::create_dir_all(&spec.output_dir)?;
    save_spec(spec, spec.output_dir.join("spec.toml"))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::param("threads", e.to_string()))?;
    let outputs: Vec<JobOutput> = pool.install(|| -> Result<Vec<JobOutput>> {
        let instances: Vec<Instance> =
            (0..spec.instances).into_par_iter().map(|i| build_instance(spec, i, base)).collect::<Result<_>>()?;
        let (h, w) = instances[0].ground_truth.require_shape()?;
        let prior = build_prior(&spec.prior, h, w)?;
        let jobs: Vec<(usize, usize)> =
            (0..spec.instances).flat_map(|i| (0..spec.solvers.len()).map(move |s| (i, s))).collect();
        jobs.par_iter().map(|&(i, s)| run_job(spec, &instances[i], prior.as_ref(), i, s)).collect()
    })?;
    let summary_path = spec.output_dir.join("summary.csv");
    let rows: Vec<SummaryRow> = outputs.iter().map(|o| o.row.clone()).collect();
    write_summary(&rows, &summary_path)?;
    Ok(ExperimentReport {
        trace_paths: outputs.iter().filter_map(|o| o.trace.clone()).collect(),
        image_paths: outputs.iter().filter_map(|o| o.image.clone()).collect(),
        summary_path,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub component: String,
    pub point: &'static str,
    pub error: f64,
}

/// Finite-difference checks of the fidelity and prior gradients of instance 0
/// at its starting point and at the ground truth.
pub fn check_gradients(spec: &ExperimentSpec, base: Option<&Path>) -> Result<Vec<GradCheck>> {
    let inst = build_instance(spec, 0, base)?;
    let (h, w) = inst.ground_truth.require_shape()?;
    let prior = build_prior(&spec.prior, h, w)?;
    let fid = inst.fidelity.as_ref();
    let mut out = Vec::new();
    for (point, x) in [("init", &inst.init), ("truth", &inst.ground_truth)] {
        out.push(GradCheck {
            component: format!("fidelity:{}", spec.problem.kind),
            point,
            error: fd_gradient_check(&|v: &Signal| fid.value(v), &|v: &Signal| fid.grad(v), x, FD_STEP),
        });
        out.push(GradCheck {
            component: "prior".into(),
            point,
            error: fd_gradient_check(
                &|v: &Signal| prior.reg_value(v),
                &|v: &Signal| prior.score(v).scale(-1.0),
                x,
                FD_STEP,
            ),
        });
    }
    Ok(out)
}
