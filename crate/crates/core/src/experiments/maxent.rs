//! Maximum entropy subject to linear equalities.
//!
//! The SDP path bounds each x_i log x_i by a scalar relative entropy epigraph
//! triple (x_i, 1, t_i). The oracle minimizes the smooth dual
//! g(λ) = bᵀλ + Σ_i exp(−1 − a_iᵀλ) with a damped Newton method.

use super::rng::InstanceRng;
use super::{ExperimentModel, ExperimentReport};
use crate::cone_factory::{push_op_rel_entr, AffineExpr, Assignment, LinearMatrixSystem, LmiBlock, VarRole};
use crate::error::{Error, Result};
use crate::sdp::Objective;
use nalgebra::{DMatrix, DVector};
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct MaxentInstance {
    /// ℓ × n constraint matrix.
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl MaxentInstance {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() || a.ncols() == 0 {
            return Err(Error::Shape(format!(
                "A is {}x{} but b has length {}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        Ok(MaxentInstance { a, b })
    }

    /// Gaussian A with b = A x̄ for x̄ uniform on [0.5, 1.5].
    pub fn generate(n: usize, ell: usize, seed: u64) -> Result<Self> {
        let mut rng = InstanceRng::new(seed);
        let a = DMatrix::from_fn(ell, n, |_, _| rng.normal());
        let xbar = DVector::from_fn(n, |_, _| rng.uniform_in(0.5, 1.5));
        let b = &a * xbar;
        Self::new(a, b)
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn ell(&self) -> usize {
        self.a.nrows()
    }

    /// Minimizes Σ t_i, the negated entropy bound.
    pub fn model(&self, m: usize, k: u32) -> Result<ExperimentModel> {
        let n = self.n();
        let mut sys = LinearMatrixSystem::new();
        let xs: Vec<_> = (0..n).map(|i| sys.declare(format!("x{i}"), 1, VarRole::Input)).collect();
        let ts: Vec<_> = (0..n).map(|i| sys.declare(format!("t{i}"), 1, VarRole::Auxiliary)).collect();
        let one = AffineExpr::scalar(1.0);
        let mut total = AffineExpr::zeros(1, 1);
        for i in 0..n {
            let (x, t) = (sys.expr(xs[i]), sys.expr(ts[i]));
            push_op_rel_entr(&mut sys, &format!("e{i}."), &x, &one, &t, m, k)?;
            sys.add_block(LmiBlock::scalar(format!("x{i} >= 0"), x)?)?;
            total = total.plus(&t);
        }
        for r in 0..self.ell() {
            let mut row = AffineExpr::scalar(-self.b[r]);
            for (i, &x) in xs.iter().enumerate() {
                row = row.plus(&sys.expr(x).scaled(self.a[(r, i)]));
            }
            sys.add_equality(format!("row{r}"), row)?;
        }
        Ok(ExperimentModel {
            system: sys,
            objective: Objective::minimize(total),
            fixings: Assignment::new(),
        })
    }

    /// Approximate optimum through the SDP path, with the solver status.
    pub fn solve_sdp(&self, m: usize, k: u32) -> Result<(f64, String)> {
        let run = self.model(m, k)?.solve()?;
        Ok((-run.value, run.status()))
    }

    /// Optimal entropy from the dual, and whether Newton's method converged.
    pub fn oracle(&self) -> (f64, bool) {
        let (a, b) = (&self.a, &self.b);
        let primal = |lam: &DVector<f64>| {
            let s = a.tr_mul(lam);
            s.map(|v| (-1.0 - v).exp())
        };
        let g = |lam: &DVector<f64>| b.dot(lam) + primal(lam).sum();
        let mut lam = DVector::zeros(self.ell());
        let mut val = g(&lam);
        for _ in 0..200 {
            let x = primal(&lam);
            let grad = b - a * &x;
            let hess = a * DMatrix::from_diagonal(&x) * a.transpose();
            let Some(chol) = hess.cholesky() else {
                return (val, false);
            };
            let step = chol.solve(&grad);
            let decrement = grad.dot(&step);
            if decrement <= 1e-24 * (1.0 + val.abs()) {
                return (val, true);
            }
            let mut s = 1.0;
            loop {
                let cand = &lam - &step * s;
                let cv = g(&cand);
                if cv.is_finite() && cv <= val - 0.25 * s * decrement {
                    lam = cand;
                    val = cv;
                    break;
                }
                s *= 0.5;
                if s < 1e-12 {
                    return (val, decrement < 1e-16 * (1.0 + val.abs()));
                }
            }
        }
        (val, false)
    }

    pub fn report(&self, m: usize, k: u32, seed: Option<u64>) -> Result<ExperimentReport> {
        let start = Instant::now();
        let (sdp, status) = self.solve_sdp(m, k)?;
        let (oracle, converged) = self.oracle();
        Ok(ExperimentReport {
            name: "maxent".into(),
            m,
            k,
            n: self.n(),
            ell: Some(self.ell()),
            seed,
            sdp_objective: sdp,
            oracle_objective: oracle,
            gap: (sdp - oracle).abs(),
            wall_time_s: start.elapsed().as_secs_f64(),
            solver_status: status,
            oracle_converged: converged,
        })
    }
}

/// Seeded maximum entropy instance solved both ways.
pub fn maxent(n: usize, ell: usize, seed: u64, m: usize, k: u32) -> Result<ExperimentReport> {
    MaxentInstance::generate(n, ell, seed)?.report(m, k, Some(seed))
}
