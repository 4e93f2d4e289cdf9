//! Seeded fixtures shared by the benchmarks.

use padelmi::experiments::rng::InstanceRng;
use padelmi::experiments::MaxentInstance;
use padelmi::sdp::CompiledSdp;
use padelmi::{cone_factory, HermitianMatrix};

/// A pair of complex positive definite matrices of order `n`.
pub fn pd_pair(n: usize, seed: u64) -> (HermitianMatrix, HermitianMatrix) {
    let mut rng = InstanceRng::new(seed);
    (rng.pd_matrix(n, true, 0.2), rng.pd_matrix(n, true, 0.2))
}

/// The shift problem for a random triple, ready for the solver.
pub fn shift_problem(n: usize, m: usize, k: u32, seed: u64) -> CompiledSdp {
    let (x, y) = pd_pair(n, seed);
    let t = HermitianMatrix::identity(n);
    cone_factory::shift_sdp(&x, &y, &t, m, k).expect("fixture compiles")
}

pub fn maxent_instance(n: usize, seed: u64) -> MaxentInstance {
    MaxentInstance::generate(n, n / 2, seed).expect("fixture generates")
}

/// 400 log-spaced points on [1e-3, 1e3].
pub fn log_grid() -> Vec<f64> {
    padelmi::experiments::log_grid(1e-3, 1e3, 400).expect("valid grid")
}
