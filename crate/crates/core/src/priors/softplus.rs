use std::sync::OnceLock;

use super::{estimate_constants, Constant, PriorConstants, ScorePrior};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{operator_norm, DenseMatrix, LinearOp, Signal};

fn softplus(a: f64) -> f64 {
    a.max(0.0) + (-a.abs()).exp().ln_1p()
}

fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Two-layer map `N(x) = W2 softplus(W1 x + b1) + b2`, widths `d -> w -> d`.
#[derive(Debug, Clone)]
pub struct SoftplusNet {
    w1: DenseMatrix,
    b1: Vec<f64>,
    w2: DenseMatrix,
    b2: Vec<f64>,
}

fn normalized(m: DenseMatrix, seed: u64) -> DenseMatrix {
    let (cols, rows) = m.dims();
    let norm = operator_norm(&m, 200, seed);
    if norm <= 1.0 {
        return m;
    }
    let data = m.as_slice().iter().map(|a| a / norm).collect();
    DenseMatrix::new(rows, cols, data).expect("same shape")
}

impl SoftplusNet {
    pub fn new(w1: DenseMatrix, b1: Vec<f64>, w2: DenseMatrix, b2: Vec<f64>) -> Result<Self> {
        let (d, w) = w1.dims();
        check_dim(w, b1.len())?;
        if w2.dims() != (w, d) {
            return Err(Error::Shape(format!("second layer must map {w} -> {d}, got {:?}", w2.dims())));
        }
        check_dim(d, b2.len())?;
        Ok(Self { w1, b1, w2, b2 })
    }

    /// Seeded Gaussian weights, each layer rescaled to operator norm at most 1.
    pub fn seeded(dim: usize, width: usize, seed: u64) -> Self {
        let w1 = normalized(DenseMatrix::gaussian(width, dim, seed), seed ^ 0x9e37);
        let w2 = normalized(DenseMatrix::gaussian(dim, width, seed.wrapping_add(1)), seed ^ 0x7f4a);
        let bias = DenseMatrix::gaussian(width + dim, 1, seed.wrapping_add(2));
        let b = bias.as_slice();
        Self {
            w1,
            b1: b[..width].iter().map(|v| 0.1 * v).collect(),
            w2,
            b2: b[width..].iter().map(|v| 0.1 * v).collect(),
        }
    }

    /// All weights zero, so `N(x) = b` for every `x`.
    pub fn constant(b: Signal, width: usize) -> Self {
        let d = b.len();
        Self {
            w1: DenseMatrix::new(width, d, vec![0.0; width * d]).expect("shape"),
            b1: vec![0.0; width],
            w2: DenseMatrix::new(d, width, vec![0.0; d * width]).expect("shape"),
            b2: b.into_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.b2.len()
    }

    pub fn width(&self) -> usize {
        self.b1.len()
    }

    fn pre_activation(&self, x: &Signal) -> Vec<f64> {
        let mut a = self.w1.apply(x).into_vec();
        for (ai, bi) in a.iter_mut().zip(&self.b1) {
            *ai += bi;
        }
        a
    }

    pub fn forward(&self, x: &Signal) -> Signal {
        let hidden = Signal::from_raw(self.pre_activation(x).into_iter().map(softplus).collect(), None);
        let mut out = self.w2.apply(&hidden).into_vec();
        for (o, b) in out.iter_mut().zip(&self.b2) {
            *o += b;
        }
        Signal::from_raw(out, x.shape())
    }

    /// `J_N(x)^T r` by reverse-mode chain rule through both layers.
    pub fn vjp(&self, x: &Signal, r: &Signal) -> Signal {
        let a = self.pre_activation(x);
        let back = self.w2.adjoint(r).into_vec();
        let gated = Signal::from_raw(a.iter().zip(back).map(|(ai, bi)| sigmoid(*ai) * bi).collect(), None);
        self.w1.adjoint(&gated).with_shape(x.shape())
    }
}

/// Gradient-step regularizer `g_σ(x) = ‖x - N(x)‖² / (2σ²)`.
#[derive(Debug)]
pub struct SoftplusPrior {
    net: SoftplusNet,
    sigma: f64,
    constants: OnceLock<PriorConstants>,
}

impl SoftplusPrior {
    pub fn new(net: SoftplusNet, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
        }
        Ok(Self { net, sigma, constants: OnceLock::new() })
    }

    pub fn net(&self) -> &SoftplusNet {
        &self.net
    }
}

impl Clone for SoftplusPrior {
    fn clone(&self) -> Self {
        Self { net: self.net.clone(), sigma: self.sigma, constants: self.constants.clone() }
    }
}

impl ScorePrior for SoftplusPrior {
    fn dim(&self) -> usize {
        self.net.dim()
    }

    fn reg_value(&self, x: &Signal) -> f64 {
        x.sub(&self.net.forward(x)).norm_sq() / (2.0 * self.sigma * self.sigma)
    }

    fn score(&self, x: &Signal) -> Signal {
        let r = x.sub(&self.net.forward(x));
        let grad = r.sub(&self.net.vjp(x, &r));
        grad.scale(-1.0 / (self.sigma * self.sigma)).with_shape(x.shape())
    }

    /// Sampled over the unit box on first use.
    fn constants(&self) -> PriorConstants {
        *self.constants.get_or_init(|| {
            let d = self.dim();
            let est = estimate_constants(self, &Signal::zeros(d), &Signal::filled(d, 1.0), 64, 0)
                .expect("unit box is nondegenerate");
            PriorConstants {
                lipschitz: Constant::estimated(est.lipschitz),
                hessian_lipschitz: Constant::estimated(est.hessian_lipschitz),
                weak_convexity: Constant::estimated(est.weak_convexity),
            }
        })
    }

    fn sigma(&self) -> Option<f64> {
        Some(self.sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{fd_gradient_check, hessian_symmetry_defect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(len: usize, rng: &mut ChaCha8Rng) -> Signal {
        Signal::new((0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(-800.0), 0.0);
        assert_eq!(softplus(800.0), 800.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-16);
        assert!((sigmoid(-800.0)).abs() < 1e-300);
    }

    #[test]
    fn constant_net_gives_quadratic_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random(5, &mut rng);
        let p = SoftplusPrior::new(SoftplusNet::constant(b.clone(), 3), 0.3).unwrap();
        let x = random(5, &mut rng);
        assert_eq!(p.score(&x), x.sub(&b).scale(-1.0 / (0.3 * 0.3)));
    }

    #[test]
    fn layers_are_contractive() {
        let net = SoftplusNet::seeded(8, 16, 4);
        assert!(operator_norm(&net.w1, 500, 1) <= 1.0 + 1e-6);
        assert!(operator_norm(&net.w2, 500, 1) <= 1.0 + 1e-6);
    }

    #[test]
    fn score_matches_finite_differences() {
        let p = SoftplusPrior::new(SoftplusNet::seeded(8, 16, 2), 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = random(8, &mut rng);
            let err = fd_gradient_check(&|v: &Signal| p.reg_value(v), &|v: &Signal| p.score(v).scale(-1.0), &x, 1e-5);
            assert!(err < 1e-6, "relative error {err}");
        }
    }

    #[test]
    fn hessian_is_symmetric() {
        let p = SoftplusPrior::new(SoftplusNet::seeded(8, 16, 5), 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let (x, u, v) = (random(8, &mut rng), random(8, &mut rng), random(8, &mut rng));
            assert!(hessian_symmetry_defect(&|s: &Signal| p.score(s), &x, &u, &v) < 1e-6);
        }
    }

    #[test]
    fn constants_are_finite_estimates() {
        let p = SoftplusPrior::new(SoftplusNet::seeded(4, 8, 7), 0.5).unwrap();
        let c = p.constants();
        for k in [c.lipschitz, c.hessian_lipschitz, c.weak_convexity] {
            assert!(k.value.is_finite() && !k.is_exact());
        }
    }
}
