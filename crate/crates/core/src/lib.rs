//! Restarted inertia with score-based priors (RISP) for imaging inverse
//! problems, alongside the RED baselines it accelerates.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuous;
pub mod diagnostics;
pub mod error;
pub mod fidelity;
pub mod harness;
pub mod linalg;
pub mod objective;
pub mod priors;
pub mod solvers;

pub use error::{Error, Result};
pub use fidelity::{Fidelity, FidelityConstants};
pub use linalg::{LinearOp, Signal, Spectrum};
pub use objective::{Objective, Posterior};
pub use priors::{Constant, ConstantKind, PriorConstants, ScorePrior};
pub use solvers::{run_solver, Algorithm, Mode, OutputRule, RunTrace, SolverConfig};
