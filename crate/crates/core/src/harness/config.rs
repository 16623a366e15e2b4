//! Experiment description files.
//!
//! A spec is a TOML document with top-level scalars (`spec_version`, `seed`,
//! `output_dir`, ..), the tables `[problem]`, `[phantom]`, `[prior]`, and one
//! `[[solver]]` table per solver run.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{InnerLoop, KernelSpec, Problem, ProblemParams};
use crate::solvers::{Algorithm, Mode, OutputRule, SolverConfig};

pub const SPEC_VERSION: u32 = 1;

fn default_instances() -> usize {
    1
}

fn default_target() -> f64 {
    1e-3
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub spec_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Noise seed of instance `i` is `seed + i`.
    pub seed: u64,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Gradient-norm level used for the iterations-to-target summary column.
    #[serde(default = "default_target")]
    pub grad_target: f64,
    pub problem: ProblemSpec,
    pub phantom: PhantomSpec,
    pub prior: PriorSpec,
    #[serde(rename = "solver")]
    pub solvers: Vec<SolverEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: Problem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_std: Option<f64>,
    /// `gaussian:SIZE:STD`, `uniform:SIZE`, `motion:SIZE:SEED` or `delta:SIZE`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceleration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurements: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<InnerLoop>,
}

impl ProblemSpec {
    pub fn new(kind: Problem) -> Self {
        Self {
            kind,
            lambda: None,
            noise_std: None,
            kernel: None,
            missing: None,
            factor: None,
            acceleration: None,
            center: None,
            measurements: None,
            operator_seed: None,
            inner: None,
        }
    }

    /// Defaults of the problem kind with the present fields overriding them.
    pub fn params(&self) -> Result<ProblemParams> {
        let mut p = ProblemParams::for_problem(self.kind);
        if let Some(v) = self.lambda {
            p.lambda = v;
        }
        if let Some(v) = self.noise_std {
            p.noise_std = v;
        }
        if let Some(k) = &self.kernel {
            p.kernel = k.parse::<KernelSpec>()?;
        }
        if let Some(v) = self.missing {
            p.missing = v;
        }
        if let Some(v) = self.factor {
            p.factor = v;
        }
        if let Some(v) = self.acceleration {
            p.acceleration = v;
        }
        if let Some(v) = self.center {
            p.center = v;
        }
        if let Some(v) = self.measurements {
            p.measurements = v;
        }
        if let Some(v) = self.operator_seed {
            p.operator_seed = v;
        }
        if let Some(v) = self.inner {
            p.inner = v;
        }
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    Blobs,
    Checkerboard,
    SmoothRandom,
    /// Read from a 16-bit graymap.
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of Gaussian bumps (blobs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl PhantomSpec {
    pub fn generated(kind: PhantomKind, height: usize, width: usize, seed: u64) -> Self {
        Self { kind, height: Some(height), width: Some(width), seed: Some(seed), components: None, path: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    Zero,
    /// Isotropic Gaussian around a constant image.
    Gaussian {
        mean: f64,
        variance: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    /// Equal-weight mixture whose means are seeded phantoms.
    Mixture {
        components: usize,
        variance: f64,
        sigma: f64,
        seed: u64,
        #[serde(default = "default_mean_kind")]
        mean_kind: PhantomKind,
    },
    /// Two-layer softplus denoiser with seeded weights.
    Softplus {
        width: usize,
        sigma: f64,
        seed: u64,
    },
}

fn default_mean_kind() -> PhantomKind {
    PhantomKind::Blobs
}

impl PriorSpec {
    pub fn sigma(&self) -> Option<f64> {
        match *self {
            PriorSpec::Zero => None,
            PriorSpec::Gaussian { sigma, .. } => sigma,
            PriorSpec::Mixture { sigma, .. } | PriorSpec::Softplus { sigma, .. } => Some(sigma),
        }
    }
}

/// One solver run; `name` must be unique within a spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    pub name: String,
    pub algorithm: Algorithm,
    pub step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_rule: Option<OutputRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
}

impl SolverEntry {
    pub fn new(name: impl Into<String>, algorithm: Algorithm, cfg: &SolverConfig) -> Self {
        Self {
            name: name.into(),
            algorithm,
            step: cfg.step,
            inertia: (cfg.inertia != 1.0).then_some(cfg.inertia),
            restart_budget: cfg.restart_budget.is_finite().then_some(cfg.restart_budget),
            epoch_cap: cfg.epoch_cap,
            tau: cfg.tau,
            mode: (cfg.mode != Mode::Practical).then_some(cfg.mode),
            max_iter: cfg.max_iter,
            output_rule: cfg.output_rule,
            grad_tol: cfg.grad_tol,
        }
    }

    pub fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::new(self.step, self.max_iter);
        cfg.inertia = self.inertia.unwrap_or(1.0);
        cfg.restart_budget = self.restart_budget.unwrap_or(f64::INFINITY);
        cfg.epoch_cap = self.epoch_cap;
        cfg.tau = self.tau;
        cfg.mode = self.mode.unwrap_or_default();
        cfg.output_rule = self.output_rule;
        cfg.grad_tol = self.grad_tol;
        cfg
    }
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn quoted_after<'a>(msg: &'a str, prefix: &str) -> Option<&'a str> {
    let rest = &msg[msg.find(prefix)? + prefix.len()..];
    rest.find('`').map(|end| &rest[..end])
}

fn convert(src: &str, e: toml::de::Error) -> Error {
    let line = e.span().map(|s| line_of(src, s.start)).unwrap_or(0);
    let msg = e.message();
    if let Some(key) = quoted_after(msg, "unknown field `") {
        Error::UnknownKey { line, key: key.to_string() }
    } else if let Some(field) = quoted_after(msg, "missing field `") {
        Error::MissingField { line, field: field.to_string() }
    } else {
        Error::Config { line, message: msg.trim().to_string() }
    }
}

/// Line of the `name = "<name>"` entry of the `nth` solver carrying that name.
fn solver_line(src: &str, name: &str, nth: usize) -> usize {
    src.lines()
        .enumerate()
        .filter(|(_, l)| {
            let l = l.trim_start();
            l.starts_with("name") && l.contains(&format!("\"{name}\""))
        })
        .nth(nth)
        .map(|(i, _)| i + 1)
        .unwrap_or(0)
}

pub fn parse_spec(src: &str) -> Result<ExperimentSpec> {
    let spec: ExperimentSpec = toml::from_str(src).map_err(|e| convert(src, e))?;
    let at = |key: &str| src.lines().position(|l| l.trim_start().starts_with(key)).map(|i| i + 1).unwrap_or(0);
    if spec.spec_version != SPEC_VERSION {
        return Err(Error::Config {
            line: at("spec_version"),
            message: format!("unsupported spec_version {} (expected {SPEC_VERSION})", spec.spec_version),
        });
    }
    if spec.solvers.is_empty() {
        return Err(Error::MissingField { line: 0, field: "solver".into() });
    }
    let mut seen = HashSet::new();
    for s in &spec.solvers {
        if !seen.insert(s.name.as_str()) {
            return Err(Error::Config {
                line: solver_line(src, &s.name, 1),
                message: format!("duplicate solver name `{}`", s.name),
            });
        }
        s.config()
            .validate()
            .map_err(|e| Error::Config { line: solver_line(src, &s.name, 0), message: e.to_string() })?;
    }
    if let Some(k) = &spec.problem.kernel {
        k.parse::<KernelSpec>().map_err(|e| Error::Config { line: at("kernel"), message: e.to_string() })?;
    }
    if spec.instances == 0 {
        return Err(Error::Config { line: at("instances"), message: "instances must be at least 1".into() });
    }
    validate_phantom(&spec.phantom).map_err(|e| Error::Config { line: at("[phantom]"), message: e.to_string() })?;
    Ok(spec)
}

fn validate_phantom(p: &PhantomSpec) -> Result<()> {
    match p.kind {
        PhantomKind::File => {
            if p.path.is_none() {
                return Err(Error::MissingField { line: 0, field: "path".into() });
            }
        }
        _ => {
            for (field, present) in
                [("height", p.height.is_some()), ("width", p.width.is_some()), ("seed", p.seed.is_some())]
            {
                if !present {
                    return Err(Error::param("phantom", format!("generated phantoms need `{field}`")));
                }
            }
        }
    }
    Ok(())
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
    parse_spec(&std::fs::read_to_string(path)?)
}

pub fn spec_to_string(spec: &ExperimentSpec) -> Result<String> {
    toml::to_string(spec).map_err(|e| Error::Config { line: 0, message: e.to_string() })
}

pub fn save_spec(spec: &ExperimentSpec, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, spec_to_string(spec)?)?;
    Ok(())
}

/// Sets `path` (dotted; `solver.<name>.<field>` addresses a solver by name)
/// to `value`, parsed as a TOML literal or else taken as a string.
pub fn apply_override(spec: &ExperimentSpec, path: &str, value: &str) -> Result<ExperimentSpec> {
    let bad = |message: String| Error::Config { line: 0, message };
    let mut doc = toml::Value::try_from(spec).map_err(|e| bad(e.to_string()))?;
    let literal = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    let (last, parents) = keys.split_last().ok_or_else(|| bad("empty parameter path".into()))?;
    let mut node = &mut doc;
    let mut i = 0;
    while i < parents.len() {
        let key = parents[i];
        node = if key == "solver" {
            let name = parents.get(i + 1).ok_or_else(|| bad("solver parameters read solver.<name>.<field>".into()))?;
            i += 1;
            node.get_mut("solver")
                .and_then(|v| v.as_array_mut())
                .and_then(|a| a.iter_mut().find(|s| s.get("name").and_then(|n| n.as_str()) == Some(*name)))
                .ok_or_else(|| Error::Unknown { kind: "solver", name: name.to_string() })?
        } else {
            node.get_mut(key).ok_or_else(|| Error::UnknownKey { line: 0, key: key.to_string() })?
        };
        i += 1;
    }
    let table = node.as_table_mut().ok_or_else(|| bad(format!("`{path}` does not address a table entry")))?;
    table.insert(last.to_string(), literal);
    let text = toml::to_string(&doc).map_err(|e| bad(e.to_string()))?;
    parse_spec(&text)
}

impl ExperimentSpec {
    /// One-line-per-item description printed before a run.
    pub fn header(&self) -> Result<String> {
        let p = self.problem.params()?;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# {} problem={} lambda={} noise_std={} sigma={} instances={} seed={}",
            self.name.as_deref().unwrap_or("experiment"),
            self.problem.kind,
            p.lambda,
            p.noise_std,
            self.prior.sigma().map_or("none".to_string(), |s| s.to_string()),
            self.instances,
            self.seed,
        );
        for s in &self.solvers {
            let c = s.config();
            let _ = writeln!(
                out,
                "# solver {} ({}) step={} inertia={} restart_budget={} max_iter={} mode={:?}",
                s.name, s.algorithm, c.step, c.inertia, c.restart_budget, c.max_iter, c.mode
            );
        }
        Ok(out)
    }
}
