use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::ScorePrior;
use crate::diagnostics::fd_jvp;
use crate::error::{check_dim, Error, Result};
use crate::linalg::Signal;

/// Sampled lower bounds on the smoothness constants of a prior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatedConstants {
    pub lipschitz: f64,
    pub hessian_lipschitz: f64,
    pub weak_convexity: f64,
}

const POWER_POINTS: usize = 8;
const POWER_ITERS: usize = 50;

fn uniform(lo: &Signal, hi: &Signal, rng: &mut ChaCha8Rng) -> Signal {
    let data = lo.as_slice().iter().zip(hi.as_slice()).map(|(a, b)| rng.random_range(*a..*b)).collect();
    Signal::from_raw(data, lo.shape())
}

fn unit(len: usize, rng: &mut ChaCha8Rng) -> Signal {
    let v = Signal::from_raw((0..len).map(|_| StandardNormal.sample(rng)).collect(), None);
    let n = v.norm();
    v.scale(1.0 / n)
}

/// `H_g(x) v` from central differences of the score.
fn hvp(prior: &dyn ScorePrior, x: &Signal, v: &Signal) -> Signal {
    fd_jvp(&|s: &Signal| prior.score(s), x, v).scale(-1.0)
}

/// Largest eigenvalue of `shift·I + sign·H_g(x)` by power iteration.
fn top_eigen(prior: &dyn ScorePrior, x: &Signal, shift: f64, sign: f64, rng: &mut ChaCha8Rng) -> f64 {
    let mut v = unit(x.len(), rng);
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERS {
        let w = v.scale(shift).axpy(sign, &hvp(prior, x, &v));
        lambda = v.dot(&w);
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        v = w.scale(1.0 / n);
    }
    lambda
}

/// Samples the box `[lo, hi]` and reports:
/// `L_g` as the largest score difference quotient (and spectral norm of the
/// FD Hessian at a few points), `ρ_g` from FD Hessian-vector differences and
/// `ν` from power iteration on the shifted Hessian.
pub fn estimate_constants(
    prior: &dyn ScorePrior,
    lo: &Signal,
    hi: &Signal,
    samples: usize,
    seed: u64,
) -> Result<EstimatedConstants> {
    if samples < 2 {
        return Err(Error::param("samples", format!("need at least 2, got {samples}")));
    }
    check_dim(prior.dim(), lo.len())?;
    check_dim(prior.dim(), hi.len())?;
    if lo.as_slice().iter().zip(hi.as_slice()).any(|(a, b)| !(a < b)) {
        return Err(Error::param("domain_box", "every lower bound must be below its upper bound"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = prior.dim();
    let mut lipschitz = 0.0f64;
    let mut hessian_lipschitz = 0.0f64;
    for _ in 0..samples {
        let x = uniform(lo, hi, &mut rng);
        let y = uniform(lo, hi, &mut rng);
        let gap = x.distance(&y);
        if gap == 0.0 {
            continue;
        }
        lipschitz = lipschitz.max(prior.score(&x).distance(&prior.score(&y)) / gap);
        let v = unit(d, &mut rng);
        hessian_lipschitz = hessian_lipschitz.max(hvp(prior, &x, &v).distance(&hvp(prior, &y, &v)) / gap);
    }
    let mut lambda_min = f64::INFINITY;
    for _ in 0..POWER_POINTS.min(samples) {
        let x = uniform(lo, hi, &mut rng);
        let spectral = top_eigen(prior, &x, 0.0, 1.0, &mut rng).abs();
        let shift = top_eigen(prior, &x, 0.0, -1.0, &mut rng).abs().max(spectral);
        lipschitz = lipschitz.max(spectral).max(shift);
        // λ_max(cI - H) = c - λ_min(H)
        let mu = top_eigen(prior, &x, 2.0 * shift, -1.0, &mut rng);
        lambda_min = lambda_min.min(2.0 * shift - mu);
    }
    Ok(EstimatedConstants { lipschitz, hessian_lipschitz, weak_convexity: (-lambda_min).max(0.0) })
}
