//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use risp_core::fidelity::{generate_instance, Problem, ProblemParams};
use risp_core::harness::{
    benchmark_with, build_prior, make_phantom, Benchmark, BenchmarkParams, PhantomKind, PriorSpec,
};
use risp_core::{Fidelity, ScorePrior, Signal};

/// Benchmark-family member at `size x size`.
pub fn benchmark(size: usize) -> Benchmark {
    benchmark_with(&BenchmarkParams { size, ..BenchmarkParams::default() }, 0).expect("benchmark instance")
}

/// Fidelity of `problem` on a blobs phantom, with a point to evaluate at.
pub fn fidelity(problem: Problem, size: usize) -> (Arc<dyn Fidelity>, Signal) {
    let truth = make_phantom(PhantomKind::Blobs, size, size, 1).expect("phantom");
    let mut params = ProblemParams::for_problem(problem);
    if problem == Problem::Deblur {
        params.kernel = risp_core::fidelity::KernelSpec::Gaussian { size: 9, std: 1.6 };
    }
    let inst = generate_instance(problem, &truth, 0, &params).expect("instance");
    (inst.fidelity, inst.init)
}

pub fn mixture(size: usize) -> Arc<dyn ScorePrior> {
    build_prior(&BenchmarkParams::default().prior_spec(), size, size).expect("prior")
}

pub fn softplus(size: usize, width: usize) -> Arc<dyn ScorePrior> {
    build_prior(&PriorSpec::Softplus { width, sigma: 0.1, seed: 0 }, size, size).expect("prior")
}
