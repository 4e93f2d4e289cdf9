//! Geometric programs in posynomial form.
//!
//! With y = log x every monomial c·x^a becomes exp(aᵀy + log c). The SDP path
//! bounds each such exponential through the triple (1, u, −(aᵀy + log c)),
//! which states aᵀy + log c ≤ r_{m,k}(u). Single-term constraints are affine
//! in y and enter directly. The oracle applies a barrier method with damped
//! Newton steps to the log-sum-exp form.

use super::rng::InstanceRng;
use super::{ExperimentModel, ExperimentReport};
use crate::cone_factory::{push_op_rel_entr, AffineExpr, Assignment, LinearMatrixSystem, LmiBlock, VarId, VarRole};
use crate::error::{Error, Result};
use crate::sdp::Objective;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::time::Instant;

/// c·x^a with c > 0.
#[derive(Clone, Debug, Serialize)]
pub struct Monomial {
    pub c: f64,
    pub a: Vec<f64>,
}

pub type Posynomial = Vec<Monomial>;

/// minimize objective(x) subject to constraint_j(x) ≤ 1, x > 0.
#[derive(Clone, Debug, Serialize)]
pub struct GpInstance {
    pub n: usize,
    pub objective: Posynomial,
    pub constraints: Vec<Posynomial>,
}

impl GpInstance {
    pub fn new(n: usize, objective: Posynomial, constraints: Vec<Posynomial>) -> Result<Self> {
        for p in std::iter::once(&objective).chain(&constraints) {
            if p.is_empty() {
                return Err(Error::Shape("posynomials need at least one term".into()));
            }
            for t in p {
                if t.a.len() != n {
                    return Err(Error::Shape(format!("exponent vector of length {}, expected {n}", t.a.len())));
                }
                if !(t.c > 0.0 && t.c.is_finite()) {
                    return Err(Error::domain("posynomial coefficients must be positive", t.c));
                }
            }
        }
        Ok(GpInstance { n, objective, constraints })
    }

    /// Random instance with `ell` posynomial constraints of `terms` terms.
    ///
    /// Each exponent vector has round(sparsity·n) Gaussian entries. Constraint
    /// coefficients are drawn from [0.02, 0.9/terms] so that x = 1 is strictly
    /// feasible, and the box 1/10 ≤ x_i ≤ 10 is appended as monomial constraints.
    pub fn generate(n: usize, ell: usize, terms: usize, sparsity: f64, seed: u64) -> Result<Self> {
        if n == 0 || terms == 0 || !(0.0..=1.0).contains(&sparsity) {
            return Err(Error::DegenerateParameter(format!(
                "need n > 0, terms > 0 and sparsity in [0, 1], got {n}, {terms}, {sparsity}"
            )));
        }
        let mut rng = InstanceRng::new(seed);
        let support = ((sparsity * n as f64).round() as usize).clamp(1, n);
        let exponent = |rng: &mut InstanceRng| {
            let mut a = vec![0.0; n];
            let mut placed = 0;
            while placed < support {
                let i = rng.index(n);
                if a[i] == 0.0 {
                    a[i] = rng.normal();
                    placed += 1;
                }
            }
            a
        };
        let objective = (0..terms)
            .map(|_| {
                let a = exponent(&mut rng);
                Monomial { c: rng.uniform_in(0.5, 1.5), a }
            })
            .collect();
        let hi = 0.9 / terms as f64;
        let mut constraints: Vec<Posynomial> = (0..ell)
            .map(|_| {
                (0..terms)
                    .map(|_| {
                        let a = exponent(&mut rng);
                        Monomial { c: rng.uniform_in(0.02f64.min(hi), hi), a }
                    })
                    .collect()
            })
            .collect();
        for i in 0..n {
            for (c, s) in [(0.1, 1.0), (0.1, -1.0)] {
                let mut a = vec![0.0; n];
                a[i] = s;
                constraints.push(vec![Monomial { c, a }]);
            }
        }
        Self::new(n, objective, constraints)
    }

    /// Objective value at x = exp(y).
    pub fn objective_at(&self, y: &[f64]) -> f64 {
        posynomial_log(&self.objective, y).exp()
    }

    /// Minimizes the sum of the objective term bounds u.
    pub fn model(&self, m: usize, k: u32) -> Result<ExperimentModel> {
        let mut sys = LinearMatrixSystem::new();
        let y: Vec<VarId> = (0..self.n).map(|i| sys.declare(format!("y{i}"), 1, VarRole::Input)).collect();
        let exponent = |sys: &LinearMatrixSystem, t: &Monomial| {
            let mut e = AffineExpr::scalar(t.c.ln());
            for (i, &ai) in t.a.iter().enumerate() {
                if ai != 0.0 {
                    e = e.plus(&sys.expr(y[i]).scaled(ai));
                }
            }
            e
        };
        let bound_terms = |sys: &mut LinearMatrixSystem, label: &str, p: &Posynomial| -> Result<AffineExpr> {
            let mut sum = AffineExpr::zeros(1, 1);
            for (j, t) in p.iter().enumerate() {
                let u = sys.declare(format!("{label}.u{j}"), 1, VarRole::Auxiliary);
                let ue = sys.expr(u);
                let neg = exponent(sys, t).scaled(-1.0);
                push_op_rel_entr(sys, &format!("{label}.{j}."), &AffineExpr::scalar(1.0), &ue, &neg, m, k)?;
                sum = sum.plus(&ue);
            }
            Ok(sum)
        };
        let objective = bound_terms(&mut sys, "obj", &self.objective)?;
        for (j, p) in self.constraints.iter().enumerate() {
            let label = format!("con{j}");
            let slack = if let [t] = p.as_slice() {
                exponent(&sys, t).scaled(-1.0)
            } else {
                AffineExpr::scalar(1.0).minus(&bound_terms(&mut sys, &label, p)?)
            };
            sys.add_block(LmiBlock::scalar(label, slack)?)?;
        }
        Ok(ExperimentModel {
            system: sys,
            objective: Objective::minimize(objective),
            fixings: Assignment::new(),
        })
    }

    /// Approximate optimum through the SDP path, with the solver status.
    pub fn solve_sdp(&self, m: usize, k: u32) -> Result<(f64, String)> {
        let run = self.model(m, k)?.solve()?;
        Ok((run.value, run.status()))
    }

    /// Optimal value and minimizer in log variables from the barrier method,
    /// with a convergence flag.
    pub fn oracle(&self) -> (f64, Vec<f64>, bool) {
        let fs: Vec<LogSumExp> = self.constraints.iter().map(|p| LogSumExp::new(p, self.n)).collect();
        let f0 = LogSumExp::new(&self.objective, self.n);
        let mut y = DVector::zeros(self.n);
        let mut ok = true;
        if !fs.is_empty() && fs.iter().any(|f| f.value(&y) >= 0.0) {
            match phase_one(&fs, y.clone()) {
                Some(p) => y = p,
                None => return (f64::NAN, y.as_slice().to_vec(), false),
            }
        }
        let barrier = Barrier { f0: &f0, fs: &fs };
        if fs.is_empty() {
            ok &= newton(&|v: &DVector<f64>| barrier.eval(1.0, v), &mut y, 1e-14);
        } else {
            let mut t = 1.0;
            let target = 1e-11;
            loop {
                ok &= newton(&|v: &DVector<f64>| barrier.eval(t, v), &mut y, 1e-14 * t);
                if fs.len() as f64 / t < target {
                    break;
                }
                t *= 10.0;
            }
        }
        (f0.value(&y).exp(), y.as_slice().to_vec(), ok)
    }

    pub fn report(&self, m: usize, k: u32, seed: Option<u64>) -> Result<ExperimentReport> {
        let start = Instant::now();
        let (sdp, status) = self.solve_sdp(m, k)?;
        let (oracle, _, converged) = self.oracle();
        Ok(ExperimentReport {
            name: "gp".into(),
            m,
            k,
            n: self.n,
            ell: Some(self.constraints.len()),
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

/// Seeded geometric program solved both ways.
pub fn gp(n: usize, ell: usize, terms: usize, sparsity: f64, seed: u64, m: usize, k: u32) -> Result<ExperimentReport> {
    let inst = GpInstance::generate(n, ell, terms, sparsity, seed)?;
    let mut report = inst.report(m, k, Some(seed))?;
    report.ell = Some(ell);
    Ok(report)
}

fn posynomial_log(p: &Posynomial, y: &[f64]) -> f64 {
    let e: Vec<f64> = p
        .iter()
        .map(|t| t.c.ln() + t.a.iter().zip(y).map(|(a, v)| a * v).sum::<f64>())
        .collect();
    let mx = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    mx + e.iter().map(|v| (v - mx).exp()).sum::<f64>().ln()
}

/// log Σ exp(A y + b) with its derivatives.
struct LogSumExp {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl LogSumExp {
    fn new(p: &Posynomial, n: usize) -> Self {
        LogSumExp {
            a: DMatrix::from_fn(p.len(), n, |r, c| p[r].a[c]),
            b: DVector::from_iterator(p.len(), p.iter().map(|t| t.c.ln())),
        }
    }

    fn softmax(&self, y: &DVector<f64>) -> (f64, DVector<f64>) {
        let e = &self.a * y + &self.b;
        let mx = e.max();
        let w = e.map(|v| (v - mx).exp());
        let s = w.sum();
        (mx + s.ln(), w / s)
    }

    fn value(&self, y: &DVector<f64>) -> f64 {
        self.softmax(y).0
    }

    fn derivatives(&self, y: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let (v, p) = self.softmax(y);
        let g = self.a.tr_mul(&p);
        let cov = DMatrix::from_diagonal(&p) - &p * p.transpose();
        let h = self.a.tr_mul(&(cov * &self.a));
        (v, g, h)
    }
}

struct Barrier<'a> {
    f0: &'a LogSumExp,
    fs: &'a [LogSumExp],
}

impl Barrier<'_> {
    /// t·f0 − Σ log(−f_j), or None outside the domain.
    fn eval(&self, t: f64, y: &DVector<f64>) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let (v0, g0, h0) = self.f0.derivatives(y);
        let mut val = t * v0;
        let mut grad = g0 * t;
        let mut hess = h0 * t;
        for f in self.fs {
            let (v, g, h) = f.derivatives(y);
            if v >= 0.0 {
                return None;
            }
            val -= (-v).ln();
            grad += &g / (-v);
            hess += h / (-v) + &g * g.transpose() / (v * v);
        }
        Some((val, grad, hess))
    }
}

type Model<'a> = dyn Fn(&DVector<f64>) -> Option<(f64, DVector<f64>, DMatrix<f64>)> + 'a;

/// Damped Newton minimization in place, stopping once the squared Newton
/// decrement is at most `tol`. Returns false on failure.
fn newton(model: &Model<'_>, y: &mut DVector<f64>, tol: f64) -> bool {
    let Some((mut val, mut grad, mut hess)) = model(y) else {
        return false;
    };
    for _ in 0..500 {
        let n = y.len();
        let scale = hess.diagonal().amax().max(1.0);
        let reg = hess.clone() + DMatrix::identity(n, n) * (1e-14 * scale);
        let Some(chol) = reg.cholesky() else {
            return false;
        };
        let step = chol.solve(&grad);
        let decrement = grad.dot(&step);
        if decrement <= tol {
            return true;
        }
        let mut s = 1.0;
        loop {
            let cand = &*y - &step * s;
            if let Some((cv, cg, ch)) = model(&cand) {
                if (s == 1.0 && decrement < 1e-3) || cv <= val - 0.25 * s * decrement {
                    *y = cand;
                    (val, grad, hess) = (cv, cg, ch);
                    break;
                }
            }
            s *= 0.5;
            if s < 1e-14 {
                return decrement < 1e3 * tol;
            }
        }
    }
    false
}

/// A point where every constraint is strictly satisfied, found by Newton
/// steps on the soft maximum of the constraints.
fn phase_one(fs: &[LogSumExp], mut y: DVector<f64>) -> Option<DVector<f64>> {
    let n = y.len();
    let soft = |y: &DVector<f64>| {
        let mut val = 0.0;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        let vals: Vec<(f64, DVector<f64>, DMatrix<f64>)> = fs.iter().map(|f| f.derivatives(y)).collect();
        let mx = vals.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = vals.iter().map(|v| (v.0 - mx).exp()).collect();
        let s: f64 = w.iter().sum();
        for (wi, (_, g, h)) in w.iter().zip(&vals) {
            let p = wi / s;
            grad += g * p;
            hess += h * p + g * g.transpose() * p;
        }
        hess -= &grad * grad.transpose();
        val += mx + s.ln();
        (val, grad, hess)
    };
    for _ in 0..200 {
        if fs.iter().all(|f| f.value(&y) < -1e-3) {
            return Some(y);
        }
        let (val, grad, hess) = soft(&y);
        let reg = hess + DMatrix::identity(n, n) * 1e-8;
        let step = reg.cholesky()?.solve(&grad);
        let mut s = 1.0;
        loop {
            let cand = &y - &step * s;
            if soft(&cand).0 < val - 1e-4 * s * grad.dot(&step) {
                y = cand;
                break;
            }
            s *= 0.5;
            if s < 1e-12 {
                return None;
            }
        }
    }
    None
}
