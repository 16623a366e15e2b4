//! Heavy-ball dynamics `ẍ + αẋ + ∇F(x) = 0`, its restarted variant and the
//! gradient flow `ẋ = -∇F(x)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::fidelity::{Fidelity, FidelityConstants};
use crate::linalg::Signal;
use crate::objective::Objective;
use crate::priors::ZeroPrior;
use crate::solvers::{run_solver, Algorithm, SolverConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct OdeState {
    pub x: Signal,
    /// `ẋ`
    pub v: Signal,
    /// Time since the epoch started.
    pub t: f64,
    /// `∫₀ᵗ ‖ẋ‖² ds`
    pub path_integral: f64,
}

impl OdeState {
    pub fn at_rest(x: Signal) -> Self {
        let v = Signal::zeros(x.len()).with_shape(x.shape());
        Self { x, v, t: 0.0, path_integral: 0.0 }
    }

    fn rest(&mut self) {
        self.v = Signal::zeros(self.x.len()).with_shape(self.x.shape());
        self.t = 0.0;
        self.path_integral = 0.0;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContParams {
    /// Friction `α`.
    pub alpha: f64,
    /// Epoch length `T_max`.
    pub t_max: f64,
    /// `B`; `inf` disables restarts.
    pub restart_budget: f64,
    /// Integrator step `h`.
    pub step: f64,
    /// Total integration time `T`.
    pub total_time: f64,
}

impl ContParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive and finite, got {v}")))
            }
        };
        pos("alpha", self.alpha)?;
        pos("t_max", self.t_max)?;
        pos("step", self.step)?;
        pos("total_time", self.total_time)?;
        if !(self.restart_budget >= 0.0) {
            return Err(Error::param("restart_budget", format!("must be nonnegative, got {}", self.restart_budget)));
        }
        Ok(())
    }
}

/// `E = F(x) + ½‖v‖²`
pub fn energy(f: &dyn Objective, state: &OdeState) -> f64 {
    f.value(&state.x) + 0.5 * state.v.norm_sq()
}

fn step_with_grad(state: &OdeState, grad: &Signal, alpha: f64, h: f64) -> Result<OdeState> {
    let v = state.v.axpy(-h, grad).scale(1.0 / (1.0 + alpha * h));
    let x = state.x.axpy(h, &v);
    if !(x.is_finite() && v.is_finite()) {
        return Err(Error::NonFinite(format!("heavy-ball state at epoch time {}", state.t + h)));
    }
    let speed_sq = v.norm_sq();
    Ok(OdeState { x, v, t: state.t + h, path_integral: state.path_integral + h * speed_sq })
}

/// Damped symplectic Euler: `v⁺ = (v - h∇F(x))/(1 + αh)`, `x⁺ = x + h v⁺`,
/// path integral advanced by `h‖v⁺‖²`.
pub fn heavy_ball_step(f: &dyn Objective, state: &OdeState, alpha: f64, h: f64) -> Result<OdeState> {
    if !(h > 0.0) {
        return Err(Error::param("step", format!("must be positive, got {h}")));
    }
    step_with_grad(state, &f.grad(&state.x), alpha, h)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContRecord {
    pub time: f64,
    pub epoch: usize,
    pub grad_norm: f64,
    pub objective: f64,
    /// `‖ẋ‖`
    pub speed: f64,
    pub energy: f64,
    /// A restart zeroed the velocity at this time.
    pub restarted: bool,
}

#[derive(Clone, Debug)]
pub struct ContTrace {
    pub records: Vec<ContRecord>,
    pub output: Signal,
    pub final_state: OdeState,
    pub restarts: usize,
    /// Averaging horizon `K₀` when an epoch completed.
    pub k0: Option<f64>,
}

impl ContTrace {
    pub fn min_grad_norm(&self) -> f64 {
        self.records.iter().map(|r| r.grad_norm).fold(f64::INFINITY, f64::min)
    }
}

fn record(f: &dyn Objective, state: &OdeState, grad: &Signal, time: f64, epoch: usize, restarted: bool) -> ContRecord {
    let objective = f.value(&state.x);
    let speed_sq = state.v.norm_sq();
    ContRecord {
        time,
        epoch,
        grad_norm: grad.norm(),
        objective,
        speed: speed_sq.sqrt(),
        energy: objective + 0.5 * speed_sq,
        restarted,
    }
}

fn step_count(time: f64, h: f64) -> usize {
    (time / h).round().max(1.0) as usize
}

/// Restarted heavy ball. An epoch restarts (`v ← 0`) once
/// `t ∫₀ᵗ ‖ẋ‖² > B²`; the run stops when an epoch reaches `T_max` or the total
/// time is spent. The output is the time average of `x` over `[0, K₀]` of the
/// final epoch, `K₀` being the slowest stored instant in `[T_max/2, T_max]`.
pub fn continuous_risp(f: &dyn Objective, params: &ContParams, x0: &Signal) -> Result<ContTrace> {
    params.validate()?;
    let h = params.step;
    let total = step_count(params.total_time, h);
    let epoch_len = step_count(params.t_max, h);
    let half = epoch_len.div_ceil(2);
    let b2 = params.restart_budget * params.restart_budget;

    let mut state = OdeState::at_rest(x0.clone());
    let mut grad = f.grad(&state.x);
    let mut records = vec![record(f, &state, &grad, 0.0, 0, false)];
    let mut epoch = 0;
    let mut restarts = 0;
    let mut local = 0usize;
    let mut integral = Signal::zeros(x0.len()).with_shape(x0.shape());
    let mut slowest: Option<(f64, usize, Signal)> = None;
    let mut completed = None;

    for n in 1..=total {
        let next = step_with_grad(&state, &grad, params.alpha, h)?;
        integral = integral.add(&state.x.add(&next.x).scale(0.5 * h));
        state = next;
        local += 1;
        state.t = local as f64 * h;
        grad = f.grad(&state.x);
        let restarted = state.t * state.path_integral > b2;
        if restarted {
            state.rest();
            local = 0;
            integral = Signal::zeros(x0.len()).with_shape(x0.shape());
            slowest = None;
            restarts += 1;
        } else if local >= half {
            let speed = state.v.norm();
            if slowest.as_ref().is_none_or(|s| speed < s.0) {
                slowest = Some((speed, local, integral.clone()));
            }
        }
        records.push(record(f, &state, &grad, n as f64 * h, epoch, restarted));
        if restarted {
            epoch += 1;
        } else if local >= epoch_len {
            completed = slowest.take();
            break;
        }
    }

    let (output, k0) = match completed {
        Some((_, steps, integral)) => {
            let k0 = steps as f64 * h;
            (integral.scale(1.0 / k0), Some(k0))
        }
        None => {
            log::warn!("continuous RISP: no epoch reached T_max; returning the final state");
            (state.x.clone(), None)
        }
    };
    Ok(ContTrace { records, output, final_state: state, restarts, k0 })
}

/// Plain heavy ball from rest over `[0, total_time]`.
pub fn heavy_ball(f: &dyn Objective, alpha: f64, h: f64, total_time: f64, x0: &Signal) -> Result<ContTrace> {
    let params = ContParams { alpha, t_max: total_time, restart_budget: f64::INFINITY, step: h, total_time };
    continuous_risp(f, &params, x0)
}

/// Explicit Euler on `ẋ = -∇F(x)`.
pub fn gradient_flow(f: &dyn Objective, total_time: f64, h: f64, x0: &Signal) -> Result<ContTrace> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::param("step", format!("must be positive and finite, got {h}")));
    }
    let total = step_count(total_time, h);
    let mut state = OdeState::at_rest(x0.clone());
    let mut grad = f.grad(&state.x);
    let mut records = vec![record(f, &state, &grad, 0.0, 0, false)];
    for n in 1..=total {
        let x = state.x.axpy(-h, &grad);
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("gradient flow at time {}", n as f64 * h)));
        }
        state.x = x;
        state.t = n as f64 * h;
        grad = f.grad(&state.x);
        records.push(record(f, &state, &grad, state.t, 0, false));
    }
    Ok(ContTrace { output: state.x.clone(), records, final_state: state, restarts: 0, k0: None })
}

/// Lets an [`Objective`] drive the discrete solvers as a fidelity term.
struct AsFidelity<'a>(&'a dyn Objective);

impl fmt::Debug for AsFidelity<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AsFidelity").field("dim", &self.0.dim()).finish()
    }
}

impl Fidelity for AsFidelity<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, x: &Signal) -> f64 {
        self.0.value(x)
    }

    fn grad(&self, x: &Signal) -> Signal {
        self.0.grad(x)
    }

    fn prox(&self, _z: &Signal, _eta: f64) -> Result<Signal> {
        Err(Error::param("prox", "generic objectives have no proximal operator"))
    }

    fn constants(&self) -> FidelityConstants {
        FidelityConstants::quadratic(0.0, 1.0)
    }
}

/// `max_k ‖x^k - x(√η k)‖` between RISP-GM without restarts and the heavy ball
/// with `α = θ/√η`, integrated with step `√η/100`, over `[0, T]`.
pub fn discretization_gap(f: &dyn Objective, eta: f64, theta: f64, total_time: f64, x0: &Signal) -> Result<f64> {
    let dt = eta.sqrt();
    let alpha = theta / dt;
    if !alpha.is_finite() {
        return Err(Error::param("theta", "θ/√η must be finite"));
    }
    let iters = (total_time / dt).floor() as usize;
    if iters == 0 {
        return Ok(0.0);
    }
    let fid = AsFidelity(f);
    let prior = ZeroPrior { dim: f.dim() };
    let cfg = SolverConfig { keep_iterates: true, ..SolverConfig::new(eta, iters).with_inertia(theta, f64::INFINITY) };
    let trace = run_solver(Algorithm::RispGm, &fid, &prior, &cfg, x0, None)?;
    let discrete = trace.iterates.unwrap_or_default();

    const SUBSTEPS: usize = 100;
    let h = dt / SUBSTEPS as f64;
    let mut state = OdeState::at_rest(x0.clone());
    let mut gap = 0.0f64;
    for xk in discrete.iter().skip(1) {
        for _ in 0..SUBSTEPS {
            state = heavy_ball_step(f, &state, alpha, h)?;
        }
        gap = gap.max(xk.distance(&state.x));
    }
    Ok(gap)
}
