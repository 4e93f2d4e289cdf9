//! Approximations accelerated by functional equations of means.
//!
//! A [`MeanIteration`] pairs a positive operator monotone target g with a map
//! Φ(x, y) = (P_{h₁}(x, y), P_{h₂}(x, y)) that leaves P_g invariant. The
//! composed approximant is P_{r_m⁺} ∘ Φ^{(k)}.

use crate::cone_factory::{push_geomean, push_perspective_ft_plus, LinearMatrixSystem, VarRole};
use crate::error::{Error, Result};
use crate::hermitian::{geometric_mean, nc_perspective, HermitianMatrix};
use crate::quadrature::{gauss_agm, gauss_log_mean, QuadratureRule};
use crate::scalar_approx::{Anchor, RationalApproximant};
use crate::sdp::{compile, Objective, SdpOptions};
use crate::{AffineExpr, Assignment};

/// Arithmetic-geometric mean of two nonnegative numbers.
pub fn agm(x: f64, y: f64) -> f64 {
    let (mut a, mut g) = (x, y);
    if a == 0.0 || g == 0.0 {
        return 0.0;
    }
    for _ in 0..64 {
        if (a - g).abs() <= 1e-15 * a.max(g) {
            break;
        }
        let next = 0.5 * (a + g);
        g = (a * g).sqrt();
        a = next;
    }
    0.5 * (a + g)
}

/// (x − y)/(log x − log y), extended by continuity to x at x = y.
pub fn log_mean(x: f64, y: f64) -> f64 {
    if x == y {
        return x;
    }
    let r = (x - y) / y;
    y * r / r.ln_1p()
}

/// The scalar functions h₁, h₂ that may appear in a mean iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeanFunction {
    /// (x + 1)/2
    Arithmetic,
    /// √x
    Geometric,
    /// (x + √x)/2
    ArithmeticGeometricLeft,
    /// (1 + √x)/2
    ArithmeticGeometricRight,
}

impl MeanFunction {
    pub fn eval(self, x: f64) -> f64 {
        self.perspective(x, 1.0)
    }

    /// y h(x/y)
    pub fn perspective(self, x: f64, y: f64) -> f64 {
        match self {
            MeanFunction::Arithmetic => 0.5 * (x + y),
            MeanFunction::Geometric => (x * y).sqrt(),
            MeanFunction::ArithmeticGeometricLeft => 0.5 * (x + (x * y).sqrt()),
            MeanFunction::ArithmeticGeometricRight => 0.5 * (y + (x * y).sqrt()),
        }
    }

    pub fn value_at_one(self) -> f64 {
        1.0
    }

    pub fn derivative_at_one(self) -> f64 {
        match self {
            MeanFunction::Arithmetic | MeanFunction::Geometric => 0.5,
            MeanFunction::ArithmeticGeometricLeft => 0.75,
            MeanFunction::ArithmeticGeometricRight => 0.25,
        }
    }

    /// Total size of the blocks emitted by [`MeanFunction::push_hypograph`].
    pub fn lmi_size(self) -> usize {
        match self {
            MeanFunction::Arithmetic => 0,
            _ => 2,
        }
    }

    /// Constrains u to satisfy u ≤ y h(x/y) for scalar expressions x, y, u.
    pub fn push_hypograph(
        self,
        sys: &mut LinearMatrixSystem,
        label: &str,
        x: &AffineExpr,
        y: &AffineExpr,
        u: &AffineExpr,
    ) -> Result<()> {
        match self {
            MeanFunction::Arithmetic => {
                sys.add_equal(label, u.clone(), &x.clone().plus(y).scaled(0.5))
            }
            MeanFunction::Geometric => push_geomean(sys, label, x, u, y),
            MeanFunction::ArithmeticGeometricLeft | MeanFunction::ArithmeticGeometricRight => {
                let g = sys.declare(format!("{label}_g"), 1, VarRole::Auxiliary);
                let ge = sys.expr(g);
                push_geomean(sys, label, x, &ge, y)?;
                let base = if self == MeanFunction::ArithmeticGeometricLeft { x } else { y };
                sys.add_equal(format!("{label}_avg"), u.clone(), &base.clone().plus(&ge).scaled(0.5))
            }
        }
    }

    fn matrix_perspective(self, x: &HermitianMatrix, y: &HermitianMatrix) -> Result<HermitianMatrix> {
        Ok(match self {
            MeanFunction::Arithmetic => (x + y).scale(0.5),
            MeanFunction::Geometric => geometric_mean(x, y, 0.5)?,
            MeanFunction::ArithmeticGeometricLeft => (x + &geometric_mean(x, y, 0.5)?).scale(0.5),
            MeanFunction::ArithmeticGeometricRight => (y + &geometric_mean(x, y, 0.5)?).scale(0.5),
        })
    }
}

/// The limit function g whose perspective the iteration preserves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeanTarget {
    LogMean,
    Agm,
}

impl MeanTarget {
    /// P_g(x, y)
    pub fn perspective(self, x: f64, y: f64) -> f64 {
        match self {
            MeanTarget::LogMean => log_mean(x, y),
            MeanTarget::Agm => agm(x, y),
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        self.perspective(x, 1.0)
    }

    /// (g(0), g(1))
    pub fn anchors(self) -> (f64, f64) {
        (0.0, 1.0)
    }

    /// Gauss rule for the measure in g(x) = g(0) + (g(1) − g(0)) ∫ f_t⁺(x) dμ(t).
    pub fn rule(self, m: usize) -> Result<QuadratureRule> {
        match self {
            MeanTarget::LogMean => gauss_log_mean(m),
            MeanTarget::Agm => gauss_agm(m),
        }
    }

    /// r_m⁺ for this target.
    pub fn approximant(self, m: usize) -> Result<RationalApproximant> {
        let (g0, g1) = self.anchors();
        Ok(RationalApproximant::new(Anchor::Positive { g0, g1 }, self.rule(m)?, 0))
    }
}

/// A map Φ = (P_{h₁}, P_{h₂}) with P_g ∘ Φ = P_g and its contraction constants.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanIteration {
    pub name: &'static str,
    pub h1: MeanFunction,
    pub h2: MeanFunction,
    /// |log(P_{h₁}/P_{h₂})| ≤ |log(x/y)|/c
    pub c: f64,
    /// |log(P_{h₁}/P_{h₂})| ≤ |log(x/y)|²/c0
    pub c0: Option<f64>,
    pub target: MeanTarget,
}

impl MeanIteration {
    /// Φ(x, y) = ((x + √(xy))/2, (y + √(xy))/2), preserving the logarithmic mean.
    pub fn log_mean() -> Self {
        MeanIteration {
            name: "log-mean",
            h1: MeanFunction::ArithmeticGeometricLeft,
            h2: MeanFunction::ArithmeticGeometricRight,
            c: 2.0,
            c0: None,
            target: MeanTarget::LogMean,
        }
    }

    /// Φ(x, y) = ((x + y)/2, √(xy)), preserving the arithmetic-geometric mean.
    pub fn agm() -> Self {
        MeanIteration {
            name: "agm",
            h1: MeanFunction::Arithmetic,
            h2: MeanFunction::Geometric,
            c: 2.0,
            c0: Some(8.0),
            target: MeanTarget::Agm,
        }
    }

    pub fn step(&self, x: f64, y: f64) -> (f64, f64) {
        (self.h1.perspective(x, y), self.h2.perspective(x, y))
    }

    pub fn iterate(&self, x: f64, y: f64, k: u32) -> (f64, f64) {
        (0..k).fold((x, y), |(a, b), _| self.step(a, b))
    }

    /// |P_g(Φ(x, y)) − P_g(x, y)| / P_g(x, y)
    pub fn functional_equation_residual(&self, x: f64, y: f64) -> f64 {
        let (u, v) = self.step(x, y);
        let before = self.target.perspective(x, y);
        (self.target.perspective(u, v) - before).abs() / before
    }

    /// max{h₁'(1) + h₂'(1), h₁(1) + h₂(1) − (h₁'(1) + h₂'(1))}
    pub fn growth_constant(&self) -> f64 {
        let d = self.h1.derivative_at_one() + self.h2.derivative_at_one();
        let v = self.h1.value_at_one() + self.h2.value_at_one();
        d.max(v - d)
    }

    /// Size of the semidefinite description of one application of Φ.
    pub fn layer_size(&self) -> usize {
        self.h1.lmi_size() + self.h2.lmi_size()
    }
}

fn check_positive(x: f64, y: f64) -> Result<()> {
    if !(x > 0.0) {
        return Err(Error::domain("arguments must be positive", x));
    }
    if !(y > 0.0) {
        return Err(Error::domain("arguments must be positive", y));
    }
    Ok(())
}

/// P_{r_m⁺}(Φ^{(k)}(x, y)).
pub fn eval_rmk_phi(iter: &MeanIteration, m: usize, k: u32, x: f64, y: f64) -> Result<f64> {
    check_positive(x, y)?;
    let r = iter.target.approximant(m)?;
    let (xk, yk) = iter.iterate(x, y, k);
    Ok(yk * r.eval_rm(xk / yk))
}

/// Same as [`eval_rmk_phi`] with a prebuilt r_m⁺, for repeated evaluation.
pub fn eval_rmk_phi_with(iter: &MeanIteration, r: &RationalApproximant, k: u32, x: f64, y: f64) -> f64 {
    let (xk, yk) = iter.iterate(x, y, k);
    yk * r.eval_rm(xk / yk)
}

fn log_ratio_pair(iter: &MeanIteration, x: f64, y: f64) -> Result<(f64, f64)> {
    check_positive(x, y)?;
    let base = (x / y).ln().abs();
    if base == 0.0 {
        return Err(Error::domain("contraction ratio is undefined at x = y", x));
    }
    let (u, v) = iter.step(x, y);
    Ok(((u / v).ln().abs(), base))
}

/// |log(P_{h₁}/P_{h₂})| / |log(x/y)|
pub fn contraction_ratio(iter: &MeanIteration, x: f64, y: f64) -> Result<f64> {
    let (num, base) = log_ratio_pair(iter, x, y)?;
    Ok(num / base)
}

/// |log(P_{h₁}/P_{h₂})| / |log(x/y)|²
pub fn quadratic_ratio(iter: &MeanIteration, x: f64, y: f64) -> Result<f64> {
    let (num, base) = log_ratio_pair(iter, x, y)?;
    Ok(num / (base * base))
}

/// The real lower bound on k before rounding up to an even integer.
pub fn k_lower_bound(iter: &MeanIteration, a: f64, eps: f64) -> Result<f64> {
    if !(a > 1.0) {
        return Err(Error::domain("a must exceed 1", a));
    }
    if !(eps > 0.0) {
        return Err(Error::domain("eps must be positive", eps));
    }
    let (g0, g1) = iter.target.anchors();
    let c = iter.c;
    let range_term = 2.0 * a.ln().ln() / c.ln();
    let q = 8.0 * (g1 - g0) * (1.0 + a) / (3.0 * eps);
    let accuracy_term = match iter.c0 {
        None => (q.ln() / c.ln()).max(0.0).sqrt(),
        Some(c0) => {
            let inner = q.ln() / c0.ln();
            if inner > 1.0 {
                2.0 * inner.log2()
            } else {
                0.0
            }
        }
    };
    Ok(range_term.max(accuracy_term).max(0.0))
}

/// Parameters from the contraction argument, or (1, 0) when that already meets `eps`.
pub fn choose_params_funceq(iter: &MeanIteration, a: f64, eps: f64) -> Result<(usize, u32)> {
    let bound = k_lower_bound(iter, a, eps)?;
    if sup_error(iter, 1, 0, a, 200)? <= eps {
        return Ok((1, 0));
    }
    let mut k = bound.ceil() as u32;
    if k % 2 == 1 {
        k += 1;
    }
    let b = iter.growth_constant();
    let m = match iter.c0 {
        None => (k as f64 * 1f64.max(b.ln() / 16f64.ln())).ceil(),
        Some(c0) => (k as f64 * b.ln() / (16.0 / c0).ln()).ceil().max(1.0),
    };
    Ok(((m as usize).max(1), k))
}

/// max |r_{m,k}(x) − g(x)| over `points` log-spaced x in [1/a, a].
pub fn sup_error(iter: &MeanIteration, m: usize, k: u32, a: f64, points: usize) -> Result<f64> {
    if !(a >= 1.0) {
        return Err(Error::domain("a must be at least 1", a));
    }
    let r = iter.target.approximant(m)?;
    let la = a.ln();
    let n = points.max(2);
    Ok((0..n)
        .map(|i| {
            let x = (-la + 2.0 * la * i as f64 / (n - 1) as f64).exp();
            (eval_rmk_phi_with(iter, &r, k, x, 1.0) - iter.target.eval(x)).abs()
        })
        .fold(0.0, f64::max))
}

/// System in scalar (x, y, tau), feasible iff tau ≤ P_{r_{m,k}}(x, y).
///
/// Each of the k layers introduces u₁ ≤ P_{h₁}, u₂ ≤ P_{h₂} of the previous
/// pair; the last pair feeds m weighted harmonic-mean blocks.
pub fn funceq_cone(iter: &MeanIteration, m: usize, k: u32) -> Result<LinearMatrixSystem> {
    let rule = iter.target.rule(m)?;
    let (g0, g1) = iter.target.anchors();
    let mut sys = LinearMatrixSystem::new();
    let x = sys.declare("x", 1, VarRole::Input);
    let y = sys.declare("y", 1, VarRole::Input);
    let tau = sys.declare("tau", 1, VarRole::Input);
    let (mut cur_x, mut cur_y) = (sys.expr(x), sys.expr(y));
    for layer in 1..=k {
        let u1 = sys.declare(format!("u1_{layer}"), 1, VarRole::Auxiliary);
        let u2 = sys.declare(format!("u2_{layer}"), 1, VarRole::Auxiliary);
        let (e1, e2) = (sys.expr(u1), sys.expr(u2));
        iter.h1.push_hypograph(&mut sys, &format!("h1_{layer}"), &cur_x, &cur_y, &e1)?;
        iter.h2.push_hypograph(&mut sys, &format!("h2_{layer}"), &cur_x, &cur_y, &e2)?;
        cur_x = e1;
        cur_y = e2;
    }
    let mut total = cur_y.scaled(g0);
    for (j, (t, w)) in rule.iter().enumerate() {
        let tj = sys.declare(format!("tau{}", j + 1), 1, VarRole::Auxiliary);
        let te = sys.expr(tj);
        push_perspective_ft_plus(&mut sys, &format!("harmonic{}", j + 1), t, &cur_x, &cur_y, &te)?;
        total = total.plus(&te.scaled(w * (g1 - g0)));
    }
    sys.add_equal("tau", sys.expr(tau), &total)?;
    Ok(sys)
}

/// Largest tau with (x, y, tau) in [`funceq_cone`], found by the interior-point solver.
pub fn funceq_boundary(iter: &MeanIteration, m: usize, k: u32, x: f64, y: f64) -> Result<f64> {
    check_positive(x, y)?;
    let sys = funceq_cone(iter, m, k)?;
    let mut fix = Assignment::new();
    fix.insert(sys.require("x")?, HermitianMatrix::scalar(x));
    fix.insert(sys.require("y")?, HermitianMatrix::scalar(y));
    let tau = sys.expr(sys.require("tau")?);
    let compiled = compile(&sys, &Objective::maximize(tau), &fix)?;
    let sol = compiled.solve(&SdpOptions::default())?;
    if !sol.accurate_to(1e-7) {
        return Err(Error::Convergence {
            method: "interior-point boundary search",
            residual: sol.primal_infeasibility.max(sol.dual_infeasibility),
        });
    }
    Ok(compiled.objective_value(&sol.y))
}

/// Whether tau ≤ P_{r_{m,k}}(x, y) up to 1e-9 relative to the scale of the inputs.
pub fn funceq_membership(iter: &MeanIteration, m: usize, k: u32, x: f64, y: f64, tau: f64) -> Result<bool> {
    let bound = funceq_boundary(iter, m, k, x, y)?;
    Ok(tau <= bound + 1e-9 * x.max(y).max(1.0))
}

/// Matrix logarithmic mean Y^{1/2} g(Y^{-1/2} X Y^{-1/2}) Y^{1/2} with g(x) = (x − 1)/log x.
pub fn log_mean_matrix(x: &HermitianMatrix, y: &HermitianMatrix) -> Result<HermitianMatrix> {
    nc_perspective(|v| log_mean(v, 1.0), x, y)
}

/// Matrix version of [`eval_rmk_phi`]; only the logarithmic-mean iteration is supported.
pub fn eval_rmk_phi_matrix(
    iter: &MeanIteration,
    m: usize,
    k: u32,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    if iter.target != MeanTarget::LogMean {
        return Err(Error::DegenerateParameter(format!(
            "matrix evaluation is not available for the {} iteration",
            iter.name
        )));
    }
    let (mut a, mut b) = (x.clone(), y.clone());
    for _ in 0..k {
        let next = iter.h1.matrix_perspective(&a, &b)?;
        b = iter.h2.matrix_perspective(&a, &b)?;
        a = next;
    }
    let rule = iter.target.rule(m)?;
    let (g0, g1) = iter.target.anchors();
    let (ai, bi) = (a.inv()?, b.inv()?);
    let mut out = b.scale(g0);
    for (t, w) in rule.iter() {
        let harmonic = (&ai.scale(1.0 - t) + &bi.scale(t)).inv()?;
        out = &out + &harmonic.scale(w * (g1 - g0));
    }
    Ok(out)
}
