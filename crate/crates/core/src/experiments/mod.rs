//! Seeded experiment drivers with independent oracles.

pub mod approx;
pub mod gp;
pub mod maxent;
pub mod rng;
pub mod tracevar;

pub use approx::{approx_error, log_grid, ApproxErrorRow};
pub use gp::{gp, GpInstance, Monomial, Posynomial};
pub use maxent::{maxent, MaxentInstance};
pub use tracevar::{tracevar, tracevar_instance, tracevar_model};

use crate::cone_factory::{Assignment, LinearMatrixSystem};
use crate::error::Result;
use crate::sdp::{compile, CompiledSdp, Objective, SdpOptions, SdpSolution};
use serde::Serialize;

/// Outcome of one experiment run.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub m: usize,
    pub k: u32,
    pub n: usize,
    pub ell: Option<usize>,
    pub seed: Option<u64>,
    pub sdp_objective: f64,
    pub oracle_objective: f64,
    /// |sdp_objective − oracle_objective|
    pub gap: f64,
    pub wall_time_s: f64,
    pub solver_status: String,
    pub oracle_converged: bool,
}

impl ExperimentReport {
    /// The gap recomputed from the two stored objective values.
    pub fn recomputed_gap(&self) -> f64 {
        (self.sdp_objective - self.oracle_objective).abs()
    }

    /// True when the oracle converged and the gap is at most `tol`.
    pub fn within(&self, tol: f64) -> bool {
        self.oracle_converged && self.recomputed_gap() <= tol
    }
}

/// Result of the SDP path of an experiment.
pub(crate) struct SdpRun {
    pub solution: SdpSolution,
    pub value: f64,
}

impl SdpRun {
    pub fn status(&self) -> String {
        format!("{:?}", self.solution.status)
    }
}

/// An optimization model over a linear matrix system, with fixed inputs.
pub struct ExperimentModel {
    pub system: LinearMatrixSystem,
    pub objective: Objective,
    pub fixings: Assignment,
}

impl ExperimentModel {
    pub fn compile(&self) -> Result<CompiledSdp> {
        compile(&self.system, &self.objective, &self.fixings)
    }

    pub(crate) fn solve(&self) -> Result<SdpRun> {
        solve_compiled(self.compile()?)
    }
}

pub(crate) fn solve_compiled(compiled: CompiledSdp) -> Result<SdpRun> {
    let opts = SdpOptions {
        max_block_dim: compiled.problem.total_dim().max(400),
        ..SdpOptions::default()
    };
    let solution = compiled.solve(&opts)?;
    let value = compiled.objective_value(&solution.y);
    Ok(SdpRun { solution, value })
}
