//! Tr Y as the maximum of Tr X − D(X‖Y) over X ≻ 0.

use super::rng::InstanceRng;
use super::{ExperimentModel, ExperimentReport};
use crate::cone_factory::Assignment;
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::quantum::{quantum_rel_entr_epigraph, QreMode};
use crate::sdp::Objective;
use std::time::Instant;

/// Maximizes Tr A − tau over the epigraph with B fixed to `y`.
pub fn tracevar_model(y: &HermitianMatrix, m: usize, k: u32) -> Result<ExperimentModel> {
    let lam = y.min_eigenvalue()?;
    if lam <= 0.0 {
        return Err(Error::domain("Y must be positive definite", lam));
    }
    let sys = quantum_rel_entr_epigraph(y.dim(), m, k, QreMode::Reduced)?;
    let (a, b, tau) = (sys.require("A")?, sys.require("B")?, sys.require("tau")?);
    let objective = sys.expr(a).trace()?.minus(&sys.expr(tau));
    let mut fix = Assignment::new();
    fix.insert(b, y.clone());
    Ok(ExperimentModel {
        system: sys,
        objective: Objective::maximize(objective),
        fixings: fix,
    })
}

/// Solves the variational problem for a fixed PD `y` and compares with Tr Y.
pub fn tracevar_instance(y: &HermitianMatrix, m: usize, k: u32, seed: Option<u64>) -> Result<ExperimentReport> {
    let start = Instant::now();
    let n = y.dim();
    let run = tracevar_model(y, m, k)?.solve()?;
    let oracle = y.trace();
    Ok(ExperimentReport {
        name: "tracevar".into(),
        m,
        k,
        n,
        ell: None,
        seed,
        sdp_objective: run.value,
        oracle_objective: oracle,
        gap: (run.value - oracle).abs(),
        wall_time_s: start.elapsed().as_secs_f64(),
        solver_status: run.status(),
        oracle_converged: true,
    })
}

/// Seeded complex unit-trace PD instance.
pub fn tracevar(n: usize, seed: u64, m: usize, k: u32) -> Result<ExperimentReport> {
    let y = InstanceRng::new(seed).density_matrix(n, true);
    tracevar_instance(&y, m, k, Some(seed))
}
