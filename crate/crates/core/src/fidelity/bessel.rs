//! Modified Bessel functions `I0`, `I1` of nonnegative argument and the
//! ratio `B = I1/I0`.
//!
//! Power series below [`CROSSOVER`], Hankel asymptotic expansion above it.
//! The scaled forms `e^{-x} I_ν(x)` never overflow.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const CROSSOVER: f64 = 15.0;

fn check(x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("Bessel argument must be nonnegative, got {x}")))
    }
}

/// `Σ_k (x/2)^{2k+ν} / (k! (k+ν)!)`
fn series(nu: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if nu == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for k in 1..500u32 {
        term *= q / (k as f64 * (k + nu) as f64);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    sum
}

/// `Σ_k (-1)^k a_k(ν) / x^k`, truncated at the smallest term.
fn hankel(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut term = 1.0f64;
    let mut sum = 1.0;
    for k in 1..200u32 {
        let odd = (2 * k - 1) as f64;
        let next = term * -(mu - odd * odd) / (8.0 * k as f64 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn scaled(nu: u32, x: f64) -> f64 {
    if x <= CROSSOVER {
        series(nu, x) * (-x).exp()
    } else {
        hankel(nu, x) / (2.0 * PI * x).sqrt()
    }
}

/// `(series, asymptotic)` evaluations of `e^{-x} I_ν(x)` for `ν ∈ {0, 1}`,
/// irrespective of which branch [`i0e`]/[`i1e`] would pick.
pub fn branch_values(nu: u32, x: f64) -> Result<(f64, f64)> {
    check(x)?;
    if nu > 1 {
        return Err(Error::Domain(format!("order {nu} not supported")));
    }
    if x == 0.0 {
        return Ok((series(nu, 0.0), f64::NAN));
    }
    Ok((series(nu, x) * (-x).exp(), hankel(nu, x) / (2.0 * PI * x).sqrt()))
}

/// `I0(x)`; overflows to `+∞` beyond about 713.
pub fn i0(x: f64) -> Result<f64> {
    check(x)?;
    Ok(if x <= CROSSOVER { series(0, x) } else { scaled(0, x) * x.exp() })
}

pub fn i1(x: f64) -> Result<f64> {
    check(x)?;
    Ok(if x <= CROSSOVER { series(1, x) } else { scaled(1, x) * x.exp() })
}

/// `e^{-x} I0(x)`
pub fn i0e(x: f64) -> Result<f64> {
    check(x)?;
    Ok(scaled(0, x))
}

/// `e^{-x} I1(x)`
pub fn i1e(x: f64) -> Result<f64> {
    check(x)?;
    Ok(scaled(1, x))
}

/// `log I0(x)`, finite for every finite `x ≥ 0`.
pub fn log_i0(x: f64) -> Result<f64> {
    check(x)?;
    Ok(if x <= CROSSOVER { series(0, x).ln() } else { scaled(0, x).ln() + x })
}

const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

fn ratio(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let b = if x <= CROSSOVER { series(1, x) / series(0, x) } else { hankel(1, x) / hankel(0, x) };
    b.min(BELOW_ONE)
}

/// `B(x) = I1(x) / I0(x)`, increasing and concave with values in `[0, 1)`.
pub fn bessel_ratio(x: f64) -> Result<f64> {
    check(x)?;
    Ok(ratio(x))
}

/// `I1(x) / x` from its own series, so that `B(x)/x` stays accurate at 0.
fn i1_over_x(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 0.5;
    let mut sum = term;
    for k in 1..500u32 {
        term *= q / (k as f64 * (k + 1) as f64);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    sum
}

fn ratio_over_x(x: f64) -> f64 {
    if x <= 1.0 {
        i1_over_x(x) / series(0, x)
    } else {
        ratio(x) / x
    }
}

/// `B'(x) = 1 - B(x)/x - B(x)²`, decreasing from `B'(0) = 1/2`.
pub fn bessel_ratio_deriv(x: f64) -> Result<f64> {
    check(x)?;
    let b = ratio(x);
    Ok((1.0 - ratio_over_x(x) - b * b).max(0.0))
}

/// `B''(x) = B/x² - B'/x - 2 B B'`, with the series limit `-3x/8` near 0.
pub fn bessel_ratio_deriv2(x: f64) -> Result<f64> {
    check(x)?;
    if x < 1e-3 {
        return Ok(-0.375 * x);
    }
    let b = ratio(x);
    let d = bessel_ratio_deriv(x)?;
    Ok(b / (x * x) - d / x - 2.0 * b * d)
}
