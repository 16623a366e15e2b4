//! RED and RISP iterations with restart bookkeeping.

mod epoch;
mod theory;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use epoch::{restart_check, select_output, EpochState};
pub use theory::{inertia_formula, theory_params, TheoryParams, Variant};

use crate::diagnostics::psnr;
use crate::error::{check_dim, Error, Result};
use crate::fidelity::Fidelity;
use crate::linalg::Signal;
use crate::priors::ScorePrior;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Stop as soon as an epoch survives `K` iterations.
    Theory,
    /// Run to the iteration budget or the gradient target.
    #[default]
    Practical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputRule {
    AveragedZ,
    MinGradIterate,
}

impl fmt::Display for OutputRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputRule::AveragedZ => "averaged_z",
            OutputRule::MinGradIterate => "min_grad_iterate",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    RedGm,
    RedProx,
    RispGm,
    RispProx,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::RedGm, Algorithm::RedProx, Algorithm::RispGm, Algorithm::RispProx];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::RedGm => "red_gm",
            Algorithm::RedProx => "red_prox",
            Algorithm::RispGm => "risp_gm",
            Algorithm::RispProx => "risp_prox",
        }
    }

    pub fn is_risp(&self) -> bool {
        matches!(self, Algorithm::RispGm | Algorithm::RispProx)
    }

    pub fn is_prox(&self) -> bool {
        matches!(self, Algorithm::RedProx | Algorithm::RispProx)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == norm)
            .ok_or_else(|| Error::Unknown { kind: "algorithm", name: s.to_string() })
    }
}

fn default_inertia() -> f64 {
    1.0
}

fn default_budget() -> f64 {
    f64::INFINITY
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// `η`
    pub step: f64,
    /// `θ`; ignored by the RED methods.
    #[serde(default = "default_inertia")]
    pub inertia: f64,
    /// `B`; `inf` disables restarts.
    #[serde(default = "default_budget")]
    pub restart_budget: f64,
    /// `K`
    #[serde(default)]
    pub epoch_cap: Option<usize>,
    /// Weight `τ` on `x - D_σ(x)`. `None` uses `1/σ²`, i.e. the plain score.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub mode: Mode,
    /// Global iteration budget `n`, restarted epochs included.
    pub max_iter: usize,
    /// Defaults to `averaged_z` for RISP in theory mode, else `min_grad_iterate`.
    #[serde(default)]
    pub output_rule: Option<OutputRule>,
    /// Stop once `‖∇F‖` drops to this value.
    #[serde(default)]
    pub grad_tol: Option<f64>,
    /// Keep every `x^k` and `z^k` in the trace.
    #[serde(default)]
    pub keep_iterates: bool,
}

impl SolverConfig {
    pub fn new(step: f64, max_iter: usize) -> Self {
        Self {
            step,
            inertia: 1.0,
            restart_budget: f64::INFINITY,
            epoch_cap: None,
            tau: None,
            mode: Mode::Practical,
            max_iter,
            output_rule: None,
            grad_tol: None,
            keep_iterates: false,
        }
    }

    pub fn with_inertia(mut self, theta: f64, restart_budget: f64) -> Self {
        self.inertia = theta;
        self.restart_budget = restart_budget;
        self
    }

    /// Theory-mode configuration with `(η, B, θ, K)` taken verbatim.
    pub fn from_theory(params: &TheoryParams, max_iter: usize) -> Result<Self> {
        match *params {
            TheoryParams::Discrete { eta, restart_budget, theta, epoch_cap, .. } => Ok(Self {
                step: eta,
                inertia: theta,
                restart_budget,
                epoch_cap: Some(epoch_cap),
                tau: None,
                mode: Mode::Theory,
                max_iter,
                output_rule: Some(OutputRule::AveragedZ),
                grad_tol: None,
                keep_iterates: false,
            }),
            TheoryParams::Continuous { .. } => {
                Err(Error::param("variant", "continuous parameters do not configure a discrete solver"))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::param("step", format!("must be positive and finite, got {}", self.step)));
        }
        if !(self.inertia > 0.0 && self.inertia <= 1.0) {
            return Err(Error::param("inertia", format!("must lie in (0, 1], got {}", self.inertia)));
        }
        if !(self.restart_budget >= 0.0) {
            return Err(Error::param("restart_budget", format!("must be nonnegative, got {}", self.restart_budget)));
        }
        if self.epoch_cap == Some(0) {
            return Err(Error::param("epoch_cap", "must be at least 1"));
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::param("tau", format!("must be positive and finite, got {t}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        if let Some(t) = self.grad_tol {
            if !(t >= 0.0) {
                return Err(Error::param("grad_tol", format!("must be nonnegative, got {t}")));
            }
        }
        if self.mode == Mode::Theory && self.epoch_cap.is_none() {
            return Err(Error::param("epoch_cap", "theory mode needs an epoch cap"));
        }
        Ok(())
    }

    pub fn output_rule_for(&self, alg: Algorithm) -> OutputRule {
        match self.output_rule {
            Some(r) if alg.is_risp() => r,
            None if alg.is_risp() && self.mode == Mode::Theory => OutputRule::AveragedZ,
            _ => OutputRule::MinGradIterate,
        }
    }

    /// Multiplier `c` in the update direction `∇f - c S`.
    pub fn score_weight(&self, prior: &dyn ScorePrior) -> f64 {
        match (self.tau, prior.sigma()) {
            (None, _) => 1.0,
            (Some(t), Some(s)) => t * s * s,
            (Some(t), None) => t,
        }
    }
}

/// Smoothness `L`, Hessian-Lipschitz constant `ρ` and gap `Δ_F = F(x⁰) - bound`
/// for feeding [`theory_params`].
///
/// Estimated Hessian-Lipschitz constants are refused unless `rho_override`
/// is given.
pub fn theory_inputs(
    fid: &dyn Fidelity,
    prior: &dyn ScorePrior,
    x0: &Signal,
    lower_bound: f64,
    rho_override: Option<f64>,
) -> Result<(f64, f64, f64)> {
    let fc = fid.constants();
    let pc = prior.constants();
    let l = fc.lipschitz.value + pc.lipschitz.value;
    let rho = match rho_override {
        Some(r) => r,
        None => {
            if !(fc.hessian_lipschitz.is_exact() && pc.hessian_lipschitz.is_exact()) {
                return Err(Error::param(
                    "rho",
                    "Hessian-Lipschitz constant is only estimated; pass an explicit override",
                ));
            }
            fc.hessian_lipschitz.value + pc.hessian_lipschitz.value
        }
    };
    let delta = fid.value(x0) + prior.reg_value(x0) - lower_bound;
    if !(delta > 0.0) {
        return Err(Error::param("lower_bound", format!("F(x0) - bound = {delta} must be positive")));
    }
    Ok((l, rho, delta))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub global_iter: usize,
    pub epoch: usize,
    /// `‖∇F(x^k)‖`
    pub grad_norm: f64,
    /// `F(x^k)`
    pub objective: f64,
    /// `‖x^k - x^{k-1}‖`; zero on the initial row.
    pub residual: f64,
    /// The restart test fired after this iteration.
    pub restarted: bool,
    pub psnr: Option<f64>,
    /// Cumulative oracle calls (fidelity gradients, proxes, scores).
    pub ticks: u64,
}

#[derive(Clone, Debug)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    /// Row 0 describes `x⁰`; row `k` the iterate after `k` updates.
    pub records: Vec<IterRecord>,
    pub output: Signal,
    pub final_iterate: Signal,
    pub restarts: usize,
    pub initial_norm: f64,
    /// Fidelity gradient or prox evaluations on the update path.
    pub evaluations: usize,
    pub output_rule: OutputRule,
    /// `K₀` when the averaged output was produced.
    pub k0: Option<usize>,
    /// `x⁰, x¹, ..` when requested.
    pub iterates: Option<Vec<Signal>>,
    /// `z⁰, z¹, ..` (global numbering) when requested.
    pub extrapolated: Option<Vec<Signal>>,
}

impl RunTrace {
    /// First iteration whose gradient norm is at most `target`.
    pub fn iterations_to(&self, target: f64) -> Option<usize> {
        self.records.iter().find(|r| r.grad_norm <= target).map(|r| r.global_iter)
    }

    pub fn min_grad_norm(&self) -> f64 {
        self.records.iter().map(|r| r.grad_norm).fold(f64::INFINITY, f64::min)
    }

    pub fn last(&self) -> &IterRecord {
        self.records.last().expect("trace always holds the initial row")
    }
}

/// Oracle calls with a one-point cache, so that trace bookkeeping at `x^{k+1}`
/// is reused by an update evaluated at the same point.
struct Oracle<'a> {
    fid: &'a dyn Fidelity,
    prior: &'a dyn ScorePrior,
    weight: f64,
    ticks: u64,
    cache: Option<(Signal, Signal, Signal)>,
}

impl<'a> Oracle<'a> {
    fn parts(&mut self, x: &Signal) -> (Signal, Signal) {
        if let Some((p, g, s)) = &self.cache {
            if p == x {
                return (g.clone(), s.clone());
            }
        }
        let g = self.fid.grad(x);
        let s = self.prior.score(x);
        self.ticks += 2;
        self.cache = Some((x.clone(), g.clone(), s.clone()));
        (g, s)
    }

    fn score(&mut self, x: &Signal) -> Signal {
        if let Some((p, _, s)) = &self.cache {
            if p == x {
                return s.clone();
            }
        }
        self.ticks += 1;
        self.prior.score(x)
    }

    /// `x⁺ = x - η(∇f(x) - c S(x))`
    fn gradient_step(&mut self, x: &Signal, eta: f64) -> Signal {
        let (g, s) = self.parts(x);
        x.axpy(-eta, &g.axpy(-self.weight, &s))
    }

    /// `x⁺ = prox_{ηf}(x + η c S(x))`
    fn prox_step(&mut self, x: &Signal, eta: f64) -> Result<Signal> {
        let s = self.score(x);
        self.ticks += 1;
        self.fid.prox(&x.axpy(eta * self.weight, &s), eta)
    }

    /// `(‖∇F(x)‖, F(x))`
    fn measure(&mut self, x: &Signal) -> (f64, f64) {
        let (g, s) = self.parts(x);
        (g.sub(&s).norm(), self.fid.value(x) + self.prior.reg_value(x))
    }
}

pub fn red_gm(fid: &dyn Fidelity, prior: &dyn ScorePrior, cfg: &SolverConfig, x0: &Signal) -> Result<RunTrace> {
    run_solver(Algorithm::RedGm, fid, prior, cfg, x0, None)
}

pub fn red_prox(fid: &dyn Fidelity, prior: &dyn ScorePrior, cfg: &SolverConfig, x0: &Signal) -> Result<RunTrace> {
    run_solver(Algorithm::RedProx, fid, prior, cfg, x0, None)
}

pub fn risp_gm(fid: &dyn Fidelity, prior: &dyn ScorePrior, cfg: &SolverConfig, x0: &Signal) -> Result<RunTrace> {
    run_solver(Algorithm::RispGm, fid, prior, cfg, x0, None)
}

pub fn risp_prox(fid: &dyn Fidelity, prior: &dyn ScorePrior, cfg: &SolverConfig, x0: &Signal) -> Result<RunTrace> {
    run_solver(Algorithm::RispProx, fid, prior, cfg, x0, None)
}

/// Runs `alg` from `x0`. When `reference` is given every record carries the
/// PSNR of the current iterate against it.
///
/// RED methods take `θ = 1` and `B = ∞` regardless of the configuration, so
/// a RISP run with those values retraces them exactly.
pub fn run_solver(
    alg: Algorithm,
    fid: &dyn Fidelity,
    prior: &dyn ScorePrior,
    cfg: &SolverConfig,
    x0: &Signal,
    reference: Option<&Signal>,
) -> Result<RunTrace> {
    cfg.validate()?;
    check_dim(fid.dim(), x0.len())?;
    check_dim(fid.dim(), prior.dim())?;
    if let Some(r) = reference {
        check_dim(x0.len(), r.len())?;
    }
    if !x0.is_finite() {
        return Err(Error::NonFinite("initial iterate".into()));
    }
    let eta = cfg.step;
    if !alg.is_prox() {
        let l = fid.constants().lipschitz.value + prior.constants().lipschitz.value;
        if eta * l > 1.0 {
            log::warn!("{alg}: step {eta:e} exceeds 1/L = {:e}", 1.0 / l);
        }
    }
    let (theta, budget, mode) =
        if alg.is_risp() { (cfg.inertia, cfg.restart_budget, cfg.mode) } else { (1.0, f64::INFINITY, Mode::Practical) };
    let rule = cfg.output_rule_for(alg);
    let mut oracle = Oracle { fid, prior, weight: cfg.score_weight(prior), ticks: 0, cache: None };
    let measure_psnr = |x: &Signal| reference.map(|r| psnr(x, r, 1.0)).transpose();

    let (g0, f0) = oracle.measure(x0);
    let mut records = vec![IterRecord {
        global_iter: 0,
        epoch: 0,
        grad_norm: g0,
        objective: f0,
        residual: 0.0,
        restarted: false,
        psnr: measure_psnr(x0)?,
        ticks: oracle.ticks,
    }];
    let mut iterates = cfg.keep_iterates.then(|| vec![x0.clone()]);
    let mut extrapolated = cfg.keep_iterates.then(Vec::new);
    let mut state = EpochState::new(x0.clone(), rule == OutputRule::AveragedZ);
    let mut best = (g0, x0.clone());
    let mut epoch = 0;
    let mut restarts = 0;
    let mut completed = false;
    let mut evaluations = 0;

    let finish = |records: Vec<IterRecord>,
                  output: Signal,
                  final_iterate: Signal,
                  restarts: usize,
                  evaluations: usize,
                  output_rule: OutputRule,
                  k0: Option<usize>,
                  iterates: Option<Vec<Signal>>,
                  extrapolated: Option<Vec<Signal>>| RunTrace {
        algorithm: alg,
        records,
        output,
        final_iterate,
        restarts,
        initial_norm: x0.norm(),
        evaluations,
        output_rule,
        k0,
        iterates,
        extrapolated,
    };

    if cfg.grad_tol.is_some_and(|t| g0 <= t) {
        return Ok(finish(
            records,
            x0.clone(),
            x0.clone(),
            0,
            0,
            OutputRule::MinGradIterate,
            None,
            iterates,
            extrapolated,
        ));
    }

    for global in 1..=cfg.max_iter {
        let z = state.extrapolate(theta);
        let next = if alg.is_prox() { oracle.prox_step(&z, eta)? } else { oracle.gradient_step(&z, eta) };
        evaluations += 1;
        if let Some(zs) = extrapolated.as_mut() {
            zs.push(z.clone());
        }
        let finite = next.is_finite();
        let residual = state.advance(z, next);
        let (grad_norm, objective) = if finite { oracle.measure(&state.x_curr) } else { (f64::NAN, f64::NAN) };
        let restarted = finite && restart_check(state.k, state.sumsq, budget);
        records.push(IterRecord {
            global_iter: global,
            epoch,
            grad_norm,
            objective,
            residual,
            restarted,
            psnr: if finite { measure_psnr(&state.x_curr)? } else { None },
            ticks: oracle.ticks,
        });
        if let Some(xs) = iterates.as_mut() {
            xs.push(state.x_curr.clone());
        }
        if !(finite && grad_norm.is_finite() && objective.is_finite()) {
            let last = state.x_curr.clone();
            let trace = finish(records, best.1, last, restarts, evaluations, rule, None, iterates, extrapolated);
            return Err(Error::Diverged(Box::new(trace)));
        }
        if grad_norm < best.0 {
            best = (grad_norm, state.x_curr.clone());
        }
        if restarted {
            state.restart();
            restarts += 1;
            epoch += 1;
        } else if mode == Mode::Theory && Some(state.k) == cfg.epoch_cap {
            completed = true;
            break;
        }
        if cfg.grad_tol.is_some_and(|t| grad_norm <= t) {
            break;
        }
    }

    let final_iterate = state.x_curr.clone();
    let (output, rule, k0) = match rule {
        OutputRule::MinGradIterate => (best.1, rule, None),
        OutputRule::AveragedZ => {
            let cap = match (mode, cfg.epoch_cap) {
                (Mode::Practical, Some(k)) => k.min(state.k),
                (Mode::Practical, None) => state.k,
                (Mode::Theory, k) => k.unwrap_or(0),
            };
            match select_output(&state, cap) {
                Ok((k0, z)) if mode == Mode::Practical || completed => (z, rule, Some(k0)),
                other => {
                    let why = match other {
                        Err(e) => e.to_string(),
                        Ok(_) => "no epoch completed before the iteration budget".into(),
                    };
                    log::warn!("{alg}: averaged output unavailable ({why}); returning the min-gradient iterate");
                    (best.1, OutputRule::MinGradIterate, None)
                }
            }
        }
    };
    Ok(finish(records, output, final_iterate, restarts, evaluations, rule, k0, iterates, extrapolated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::ZeroFidelity;
    use crate::priors::{GaussianPrior, ZeroPrior};

    #[derive(Debug)]
    struct HalfNorm(usize);

    impl Fidelity for HalfNorm {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, x: &Signal) -> f64 {
            0.5 * x.norm_sq()
        }
        fn grad(&self, x: &Signal) -> Signal {
            x.clone()
        }
        fn prox(&self, z: &Signal, eta: f64) -> Result<Signal> {
            Ok(z.scale(1.0 / (1.0 + eta)))
        }
        fn constants(&self) -> crate::fidelity::FidelityConstants {
            crate::fidelity::FidelityConstants::quadratic(1.0, 1.0)
        }
    }

    fn x0() -> Signal {
        Signal::new(vec![1.0, -2.0, 0.5, 3.0]).unwrap()
    }

    #[test]
    fn exact_quadratic_step() {
        let t = red_gm(&HalfNorm(4), &ZeroPrior { dim: 4 }, &SolverConfig::new(1.0, 1), &x0()).unwrap();
        assert_eq!(t.final_iterate, Signal::zeros(4));
        assert_eq!(t.evaluations, 1);
    }

    #[test]
    fn tiny_prox_step_stays_put() {
        let prior = GaussianPrior::isotropic(Signal::zeros(4), 1.0, None).unwrap();
        let t = red_prox(&HalfNorm(4), &prior, &SolverConfig::new(1e-10, 1), &x0()).unwrap();
        assert!(t.final_iterate.distance(&x0()) < 1e-8);
    }

    #[test]
    fn zero_fidelity_prox_matches_gradient() {
        let prior = GaussianPrior::isotropic(Signal::filled(4, 0.3), 2.0, None).unwrap();
        let cfg = SolverConfig { keep_iterates: true, ..SolverConfig::new(0.4, 50) };
        let fid = ZeroFidelity { dim: 4 };
        let a = red_gm(&fid, &prior, &cfg, &x0()).unwrap();
        let b = red_prox(&fid, &prior, &cfg, &x0()).unwrap();
        for (p, q) in a.iterates.unwrap().iter().zip(b.iterates.unwrap().iter()) {
            assert!(p.distance(q) < 1e-12);
        }
    }

    #[test]
    fn unit_inertia_retraces_red() {
        let prior = GaussianPrior::isotropic(Signal::zeros(4), 0.5, Some(0.1)).unwrap();
        let cfg = SolverConfig { keep_iterates: true, ..SolverConfig::new(0.3, 40) };
        let a = red_gm(&HalfNorm(4), &prior, &cfg, &x0()).unwrap();
        let b = risp_gm(&HalfNorm(4), &prior, &cfg, &x0()).unwrap();
        assert_eq!(a.iterates, b.iterates);
    }

    #[test]
    fn restart_count_matches_flags() {
        let prior = GaussianPrior::isotropic(Signal::zeros(4), 0.5, None).unwrap();
        let cfg = SolverConfig::new(0.3, 60).with_inertia(0.2, 0.5);
        let t = risp_gm(&HalfNorm(4), &prior, &cfg, &x0()).unwrap();
        assert!(t.restarts > 0);
        assert_eq!(t.restarts, t.records.iter().filter(|r| r.restarted).count());
        assert_eq!(t.evaluations, t.last().global_iter);
    }

    #[test]
    fn divergence_keeps_trace() {
        let prior = ZeroPrior { dim: 4 };
        let err = red_gm(&HalfNorm(4), &prior, &SolverConfig::new(1e200, 1000), &x0()).unwrap_err();
        match err {
            Error::Diverged(t) => assert!(t.records.len() >= 2),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn theory_mode_stops_on_completed_epoch() {
        let prior = GaussianPrior::isotropic(Signal::zeros(4), 1.0, None).unwrap();
        let cfg = SolverConfig {
            epoch_cap: Some(10),
            mode: Mode::Theory,
            ..SolverConfig::new(0.25, 1000).with_inertia(0.3, f64::INFINITY)
        };
        let t = risp_gm(&HalfNorm(4), &prior, &cfg, &x0()).unwrap();
        assert_eq!(t.evaluations, 10);
        assert_eq!(t.output_rule, OutputRule::AveragedZ);
        assert!(t.k0.unwrap() >= 5);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.0, 10).validate().is_err());
        assert!(SolverConfig::new(1.0, 10).with_inertia(1.5, 1.0).validate().is_err());
        assert!(SolverConfig::new(1.0, 10).with_inertia(0.5, -1.0).validate().is_err());
        assert!(SolverConfig { mode: Mode::Theory, ..SolverConfig::new(1.0, 10) }.validate().is_err());
        assert_eq!("RISP-GM".parse::<Algorithm>().unwrap(), Algorithm::RispGm);
    }
}
