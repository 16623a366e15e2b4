use std::f64::consts::PI;

use super::{Constant, PriorConstants, ScorePrior};
use crate::error::{check_dim, Error, Result};
use crate::linalg::Signal;

#[derive(Debug, Clone)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Signal,
    /// Isotropic variance `s²`.
    pub variance: f64,
}

/// `g(x) = -log Σ w_i N(x; μ_i, (s_i² + σ²) I)`.
#[derive(Debug, Clone)]
pub struct MixturePrior {
    components: Vec<MixtureComponent>,
    sigma: f64,
    log_weights: Vec<f64>,
    variances: Vec<f64>,
    dim: usize,
}

impl MixturePrior {
    pub fn new(components: Vec<MixtureComponent>, sigma: f64) -> Result<Self> {
        let first =
            components.first().ok_or_else(|| Error::param("components", "mixture must have at least one component"))?;
        let dim = first.mean.len();
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", format!("must be nonnegative, got {sigma}")));
        }
        let mut total = 0.0;
        for (i, c) in components.iter().enumerate() {
            check_dim(dim, c.mean.len())?;
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::param("weight", format!("component {i}: {}", c.weight)));
            }
            if !(c.variance > 0.0 && c.variance.is_finite()) {
                return Err(Error::param("variance", format!("component {i}: {}", c.variance)));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param("weight", format!("weights sum to {total}, expected 1")));
        }
        let s2 = sigma * sigma;
        let variances: Vec<f64> = components.iter().map(|c| c.variance + s2).collect();
        let log_weights = components.iter().map(|c| c.weight.ln()).collect();
        Ok(Self { components, sigma, log_weights, variances, dim })
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    /// Smoothed variances `s_i² + σ²`.
    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    fn log_terms(&self, x: &Signal) -> Vec<f64> {
        let half_d = 0.5 * self.dim as f64;
        self.components
            .iter()
            .zip(&self.variances)
            .zip(&self.log_weights)
            .map(|((c, v), lw)| lw - x.distance(&c.mean).powi(2) / (2.0 * v) - half_d * (2.0 * PI * v).ln())
            .collect()
    }

    /// Posterior responsibilities `r_i(x)`.
    pub fn responsibilities(&self, x: &Signal) -> Vec<f64> {
        let a = self.log_terms(x);
        let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = a.iter().map(|t| (t - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|t| t / s).collect()
    }

    fn max_mean_gap(&self) -> f64 {
        let mut gap: f64 = 0.0;
        for (i, a) in self.components.iter().enumerate() {
            for b in &self.components[i + 1..] {
                gap = gap.max(a.mean.distance(&b.mean));
            }
        }
        gap
    }
}

impl ScorePrior for MixturePrior {
    fn dim(&self) -> usize {
        self.dim
    }

    fn reg_value(&self, x: &Signal) -> f64 {
        let a = self.log_terms(x);
        let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        -(m + a.iter().map(|t| (t - m).exp()).sum::<f64>().ln())
    }

    fn score(&self, x: &Signal) -> Signal {
        let r = self.responsibilities(x);
        let mut out = vec![0.0; self.dim];
        for ((c, v), ri) in self.components.iter().zip(&self.variances).zip(&r) {
            let coef = ri * (1.0 / v);
            for ((o, mu), xi) in out.iter_mut().zip(c.mean.as_slice()).zip(x.as_slice()) {
                *o += coef * (mu - xi);
            }
        }
        Signal::from_raw(out, x.shape())
    }

    fn constants(&self) -> PriorConstants {
        // Hessian = Σ r_i I / v_i - Cov_r(μ / v) (equal v); the covariance of a
        // distribution supported on a set of diameter D is at most D²/4.
        let v = self.variances.iter().cloned().fold(f64::INFINITY, f64::min);
        let equal = self.variances.iter().all(|w| (w - v).abs() <= 1e-12 * v);
        let d = self.max_mean_gap();
        let spread = d * d / (4.0 * v * v);
        let lipschitz = (1.0 / v).max(spread - 1.0 / v);
        let rho = d.powi(3) / (6.0 * 3f64.sqrt() * v.powi(3));
        let nu = (spread - 1.0 / v).max(0.0);
        PriorConstants {
            lipschitz: if equal { Constant::exact(lipschitz) } else { Constant::estimated(lipschitz) },
            hessian_lipschitz: Constant::estimated(rho),
            weak_convexity: Constant::estimated(nu),
        }
    }

    fn sigma(&self) -> Option<f64> {
        (self.sigma > 0.0).then_some(self.sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{fd_gradient_check, hessian_symmetry_defect};
    use crate::priors::GaussianPrior;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(len: usize, rng: &mut ChaCha8Rng, scale: f64) -> Signal {
        Signal::new((0..len).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
    }

    fn three(d: usize, seed: u64) -> MixturePrior {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = [0.5, 0.3, 0.2]
            .iter()
            .map(|&w| MixtureComponent { weight: w, mean: random(d, &mut rng, 1.0), variance: 0.5 })
            .collect();
        MixturePrior::new(comps, 0.1).unwrap()
    }

    #[test]
    fn single_component_is_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mu = random(7, &mut rng, 1.0);
        let m =
            MixturePrior::new(vec![MixtureComponent { weight: 1.0, mean: mu.clone(), variance: 0.8 }], 0.0).unwrap();
        let g = GaussianPrior::isotropic(mu, 0.8, None).unwrap();
        for _ in 0..10 {
            let x = random(7, &mut rng, 3.0);
            assert_eq!(m.score(&x), g.score(&x));
        }
    }

    #[test]
    fn symmetric_pair_has_zero_score_at_midpoint() {
        let a = Signal::new(vec![1.0, -2.0, 0.5]).unwrap();
        let comps = vec![
            MixtureComponent { weight: 0.5, mean: a.clone(), variance: 0.3 },
            MixtureComponent { weight: 0.5, mean: a.scale(-1.0), variance: 0.3 },
        ];
        let m = MixturePrior::new(comps, 0.2).unwrap();
        assert!(m.score(&Signal::zeros(3)).norm() < 1e-15);
    }

    #[test]
    fn score_matches_finite_differences() {
        let m = three(16, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = random(16, &mut rng, 1.5);
            let err = fd_gradient_check(&|v: &Signal| m.reg_value(v), &|v: &Signal| m.score(v).scale(-1.0), &x, 1e-5);
            assert!(err < 1e-6, "relative error {err}");
        }
    }

    #[test]
    fn stable_far_from_means() {
        let m = three(4, 4);
        let x = Signal::new(vec![1e6, -1e6, 5e5, 0.0]).unwrap();
        assert!(m.score(&x).is_finite());
        assert!(m.reg_value(&x).is_finite());
    }

    #[test]
    fn hessian_is_symmetric() {
        let m = three(8, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let (x, u, v) = (random(8, &mut rng, 1.0), random(8, &mut rng, 1.0), random(8, &mut rng, 1.0));
            assert!(hessian_symmetry_defect(&|s: &Signal| m.score(s), &x, &u, &v) < 1e-6);
        }
    }

    #[test]
    fn exact_lipschitz_bound_holds_on_pairs() {
        let m = three(6, 7);
        let c = m.constants();
        assert!(c.lipschitz.is_exact());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let (x, y) = (random(6, &mut rng, 2.0), random(6, &mut rng, 2.0));
            let ratio = m.score(&x).distance(&m.score(&y)) / x.distance(&y);
            assert!(ratio <= c.lipschitz.value * (1.0 + 1e-12));
        }
        assert!(c.weak_convexity.value <= c.lipschitz.value);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(MixturePrior::new(vec![], 0.1).is_err());
        let c = MixtureComponent { weight: 0.6, mean: Signal::zeros(2), variance: 1.0 };
        assert!(MixturePrior::new(vec![c.clone()], 0.1).is_err());
        let bad = MixtureComponent { weight: 0.4, mean: Signal::zeros(3), variance: 1.0 };
        assert!(MixturePrior::new(vec![c, bad], 0.1).is_err());
    }
}
