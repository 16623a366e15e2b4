//! Finite-difference oracles, image metrics and power-law rate fitting.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::linalg::Signal;
use crate::solvers::RunTrace;

/// Above this dimension the gradient check probes random directions.
pub const FD_COORDINATE_LIMIT: usize = 64;
pub const FD_DIRECTIONS: usize = 32;
pub const FD_STEP: f64 = 1e-5;

fn fd_step(x: &Signal, h_fd: f64) -> f64 {
    h_fd * (1.0 + x.max_abs())
}

/// Central-difference check of `grad` against `value`.
///
/// Coordinate mode reports `‖fd - g‖ / ‖g‖`; direction mode reports the
/// largest `|D_u f - <g, u>| / ‖g‖` over unit directions `u`.
pub fn fd_gradient_check(
    value: &dyn Fn(&Signal) -> f64,
    grad: &dyn Fn(&Signal) -> Signal,
    x: &Signal,
    h_fd: f64,
) -> f64 {
    let h = fd_step(x, h_fd);
    let g = grad(x);
    let gn = g.norm();
    let rel = |abs: f64| if gn > 0.0 { abs / gn } else { abs };
    let d = x.len();
    if d <= FD_COORDINATE_LIMIT {
        let mut buf = x.as_slice().to_vec();
        let mut err = 0.0;
        for i in 0..d {
            let xi = buf[i];
            buf[i] = xi + h;
            let fp = value(&Signal::from_raw(buf.clone(), x.shape()));
            buf[i] = xi - h;
            let fm = value(&Signal::from_raw(buf.clone(), x.shape()));
            buf[i] = xi;
            let e = (fp - fm) / (2.0 * h) - g[i];
            err += e * e;
        }
        rel(err.sqrt())
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut worst = 0.0f64;
        for _ in 0..FD_DIRECTIONS {
            let u = Signal::from_raw((0..d).map(|_| StandardNormal.sample(&mut rng)).collect(), x.shape());
            let u = u.scale(1.0 / u.norm());
            let fd = (value(&x.axpy(h, &u)) - value(&x.axpy(-h, &u))) / (2.0 * h);
            worst = worst.max(rel((fd - g.dot(&u)).abs()));
        }
        worst
    }
}

/// Central-difference Jacobian-vector product `J_f(x) v`.
pub fn fd_jvp(f: &dyn Fn(&Signal) -> Signal, x: &Signal, v: &Signal) -> Signal {
    let vn = v.norm();
    if vn == 0.0 {
        return Signal::zeros(x.len()).with_shape(x.shape());
    }
    let h = fd_step(x, FD_STEP);
    let u = v.scale(1.0 / vn);
    f(&x.axpy(h, &u)).sub(&f(&x.axpy(-h, &u))).scale(vn / (2.0 * h))
}

/// Relative asymmetry `|<J u, v> - <u, J v>|` of a vector field's Jacobian,
/// zero for gradient fields up to discretization error.
pub fn hessian_symmetry_defect(f: &dyn Fn(&Signal) -> Signal, x: &Signal, u: &Signal, v: &Signal) -> f64 {
    let ju = fd_jvp(f, x, u);
    let jv = fd_jvp(f, x, v);
    let scale = (ju.norm() * v.norm()).max(u.norm() * jv.norm());
    let defect = (ju.dot(v) - u.dot(&jv)).abs();
    if scale > 0.0 {
        defect / scale
    } else {
        defect
    }
}

/// `10 log10(peak² d / ‖x - ref‖²)`; `+∞` on an exact match.
pub fn psnr(x: &Signal, reference: &Signal, peak: f64) -> Result<f64> {
    check_dim(reference.len(), x.len())?;
    let err = x.distance(reference).powi(2);
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak * x.len() as f64 / err).log10())
}

/// `‖x^{k+1} - x^k‖ / ‖x^0‖` for every recorded step.
pub fn relative_error_series(trace: &RunTrace) -> Result<Vec<f64>> {
    if trace.records.is_empty() {
        return Err(Error::param("trace", "no records"));
    }
    if trace.initial_norm == 0.0 {
        return Err(Error::param("trace", "initial iterate has zero norm"));
    }
    Ok(trace.records.iter().map(|r| r.residual / trace.initial_norm).collect())
}

/// Running minimum.
pub fn min_envelope(series: &[f64]) -> Vec<f64> {
    let mut best = f64::INFINITY;
    series
        .iter()
        .map(|&v| {
            best = best.min(v);
            best
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    /// Min-envelope of the input series over the fitted window.
    pub series: Vec<f64>,
}

pub const MIN_FIT_POINTS: usize = 50;

/// Log-log least-squares fit of the min-envelope of `values` against `times`.
///
/// The default window drops every point at or before 10% of the final time;
/// nonpositive times and values are skipped.
pub fn fit_power_law(times: &[f64], values: &[f64], window: Option<(f64, f64)>) -> Result<RateFit> {
    check_dim(times.len(), values.len())?;
    let env = min_envelope(values);
    let last = times.iter().cloned().fold(0.0, f64::max);
    let (lo, hi) = window.unwrap_or((0.1 * last, last));
    let mut pts = Vec::new();
    let mut kept = Vec::new();
    for (&t, &v) in times.iter().zip(&env) {
        let inside = if window.is_some() { t >= lo && t <= hi } else { t > lo && t <= hi };
        if inside && t > 0.0 && v > 0.0 && v.is_finite() {
            pts.push((t.ln(), v.ln()));
            kept.push(v);
        }
    }
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::param("window", format!("{} usable points, need at least {MIN_FIT_POINTS}", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(RateFit { slope, intercept, r_squared, window: (lo, hi), series: kept })
}

/// Rate of the gradient-norm column of a trace against the iteration counter.
pub fn fit_rate(trace: &RunTrace, window: Option<(f64, f64)>) -> Result<RateFit> {
    let times: Vec<f64> = trace.records.iter().map(|r| r.global_iter as f64).collect();
    let values: Vec<f64> = trace.records.iter().map(|r| r.grad_norm).collect();
    fit_power_law(&times, &values, window)
}
