use super::{check_binary, check_step, check_weight, Fidelity, FidelityConstants};
use crate::error::{check_dim, Result};
use crate::linalg::Signal;

/// `f(x) = (λ/2) Σ m_i (x_i - y_i)²` for a binary mask `m`.
#[derive(Debug, Clone)]
pub struct InpaintFidelity {
    mask: Signal,
    y: Signal,
    lambda: f64,
}

impl InpaintFidelity {
    pub fn new(mask: Signal, y: Signal, lambda: f64) -> Result<Self> {
        check_weight(lambda)?;
        check_dim(mask.len(), y.len())?;
        check_binary("mask", mask.as_slice())?;
        Ok(Self { mask, y, lambda })
    }

    pub fn mask(&self) -> &Signal {
        &self.mask
    }
}

impl Fidelity for InpaintFidelity {
    fn dim(&self) -> usize {
        self.y.len()
    }

    fn value(&self, x: &Signal) -> f64 {
        let s: f64 = x
            .as_slice()
            .iter()
            .zip(self.y.as_slice())
            .zip(self.mask.as_slice())
            .map(|((a, b), m)| m * (a - b) * (a - b))
            .sum();
        0.5 * self.lambda * s
    }

    fn grad(&self, x: &Signal) -> Signal {
        x.sub(&self.y).hadamard(&self.mask).scale(self.lambda)
    }

    fn prox(&self, z: &Signal, eta: f64) -> Result<Signal> {
        check_step(eta)?;
        z.check_len(self.dim())?;
        let mu = eta * self.lambda;
        let data = z
            .as_slice()
            .iter()
            .zip(self.y.as_slice())
            .zip(self.mask.as_slice())
            .map(|((zi, yi), m)| if *m == 1.0 { (zi + mu * yi) / (1.0 + mu) } else { *zi })
            .collect();
        Ok(Signal::from_raw(data, z.shape()))
    }

    fn constants(&self) -> FidelityConstants {
        let any = self.mask.as_slice().contains(&1.0);
        FidelityConstants::quadratic(if any { self.lambda } else { 0.0 }, self.lambda)
    }
}
