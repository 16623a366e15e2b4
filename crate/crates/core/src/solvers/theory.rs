use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Gm,
    Prox,
    Continuous,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gm" => Ok(Variant::Gm),
            "prox" => Ok(Variant::Prox),
            "continuous" => Ok(Variant::Continuous),
            _ => Err(Error::Unknown { kind: "theory variant", name: s.to_string() }),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Gm => "gm",
            Variant::Prox => "prox",
            Variant::Continuous => "continuous",
        })
    }
}

/// Parameters prescribed by the convergence theorems.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TheoryParams {
    Discrete {
        variant: Variant,
        epsilon: f64,
        eta: f64,
        restart_budget: f64,
        theta: f64,
        epoch_cap: usize,
        /// Largest weak-convexity modulus the prox analysis allows.
        nu_max: Option<f64>,
    },
    Continuous {
        epsilon: f64,
        alpha: f64,
        t_max: f64,
        restart_budget: f64,
    },
}

impl TheoryParams {
    pub fn epsilon(&self) -> f64 {
        match *self {
            TheoryParams::Discrete { epsilon, .. } | TheoryParams::Continuous { epsilon, .. } => epsilon,
        }
    }

    pub fn restart_budget(&self) -> f64 {
        match *self {
            TheoryParams::Discrete { restart_budget, .. } | TheoryParams::Continuous { restart_budget, .. } => {
                restart_budget
            }
        }
    }
}

/// `4 (ε ρ η²)^{1/4}`
pub fn inertia_formula(epsilon: f64, rho: f64, eta: f64) -> f64 {
    4.0 * (epsilon * rho * eta * eta).powf(0.25)
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

/// Parameters from smoothness `L`, Hessian-Lipschitz constant `ρ`, initial
/// gap `Δ_F` and horizon `n` (iterations, or total time for the continuous
/// system).
///
/// * gm: `η = 1/(4L)`, `ε = 2^{4/7} Δ^{4/7} L^{2/7} ρ^{1/7} n^{-4/7} + L² ρ⁻¹ n⁻⁴`, `B = √(ε/ρ)`
/// * prox: `η = 1/(8L)`, `ε = Δ^{4/7} (2L)^{2/7} ρ^{1/7} n^{-4/7} + 4 L² ρ⁻¹ n⁻⁴`, `B = √(ε/(4ρ))`
/// * continuous: `ε = 2^{4/7} ρ^{1/7} Δ^{4/7} T^{-4/7} + 16 ρ⁻¹ T⁻⁴`, `α = (ερ)^{1/4}`,
///   `T_max = (ερ)^{-1/4}`, `B = √(ε/ρ)`
///
/// Discrete variants use `θ = 4(ερη²)^{1/4}` and `K = ⌈1/θ⌉`, and reject `θ ≥ 1`.
pub fn theory_params(l: f64, rho: f64, delta: f64, horizon: f64, variant: Variant) -> Result<TheoryParams> {
    if rho == 0.0 {
        return Err(Error::DegenerateCurvature);
    }
    positive("L", l)?;
    positive("rho", rho)?;
    positive("delta_f", delta)?;
    positive("n", horizon)?;
    let p = |b: f64, e: f64| b.powf(e);
    match variant {
        Variant::Gm | Variant::Prox => {
            let (eta, epsilon, restart_budget, nu_max) = if variant == Variant::Gm {
                let eps = p(2.0, 4.0 / 7.0)
                    * p(delta, 4.0 / 7.0)
                    * p(l, 2.0 / 7.0)
                    * p(rho, 1.0 / 7.0)
                    * p(horizon, -4.0 / 7.0)
                    + l * l / rho * p(horizon, -4.0);
                (1.0 / (4.0 * l), eps, (eps / rho).sqrt(), None)
            } else {
                let eps = p(delta, 4.0 / 7.0) * p(2.0 * l, 2.0 / 7.0) * p(rho, 1.0 / 7.0) * p(horizon, -4.0 / 7.0)
                    + 4.0 * l * l / rho * p(horizon, -4.0);
                (1.0 / (8.0 * l), eps, (eps / (4.0 * rho)).sqrt(), Some(8.0 * p(eps * rho, 0.25) * l.sqrt()))
            };
            let theta = inertia_formula(epsilon, rho, eta);
            if !(theta < 1.0) {
                return Err(Error::Hypothesis(format!(
                    "inertia θ = 4(ερη²)^(1/4) = {theta} must be below 1; increase n or decrease Δ_F"
                )));
            }
            let epoch_cap = (1.0 / theta).ceil() as usize;
            Ok(TheoryParams::Discrete { variant, epsilon, eta, restart_budget, theta, epoch_cap, nu_max })
        }
        Variant::Continuous => {
            let epsilon = p(2.0, 4.0 / 7.0) * p(rho, 1.0 / 7.0) * p(delta, 4.0 / 7.0) * p(horizon, -4.0 / 7.0)
                + 16.0 / rho * p(horizon, -4.0);
            Ok(TheoryParams::Continuous {
                epsilon,
                alpha: p(epsilon * rho, 0.25),
                t_max: p(epsilon * rho, -0.25),
                restart_budget: (epsilon / rho).sqrt(),
            })
        }
    }
}
