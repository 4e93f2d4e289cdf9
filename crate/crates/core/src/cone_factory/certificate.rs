use super::system::{AffineExpr, Assignment, LinearMatrixSystem, VarRole};
use crate::sdp::{compile, CompiledSdp, Objective, SdpOptions, SdpStatus};
use crate::error::{Error, Result};
use crate::hermitian::{geometric_mean, nc_perspective, HermitianMatrix};
use crate::quadrature::{gauss_legendre, QuadratureRule};
use crate::scalar_approx::{f_t, RationalApproximant};

/// Explicit auxiliary values witnessing membership in the operator relative entropy cone.
#[derive(Clone, Debug)]
pub struct MembershipCertificate {
    pub z: Vec<HermitianMatrix>,
    pub t: Vec<HermitianMatrix>,
    /// The smallest T admitted by the certificate, −2^k Σ w_j T_j.
    pub t_min: HermitianMatrix,
    rule: QuadratureRule,
    k: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MembershipMethod {
    Certificate,
    Oracle,
    /// Minimizes s with (X, Y, T + sI) in the cone using the interior-point solver.
    Solver,
}

fn require_pd(a: &HermitianMatrix, name: &str) -> Result<()> {
    let lam = a.min_eigenvalue()?;
    if lam <= 0.0 {
        return Err(Error::domain(format!("{name} is not positive definite"), lam));
    }
    Ok(())
}

/// Z_0 = Y, Z_{i+1} = X # Z_i, T_j = P_{f_{t_j}}(Z_k, X).
pub fn build_certificate(
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    m: usize,
    k: u32,
) -> Result<MembershipCertificate> {
    require_pd(x, "X")?;
    require_pd(y, "Y")?;
    let rule = gauss_legendre(m)?;
    let mut z = vec![y.clone()];
    for i in 0..k as usize {
        z.push(geometric_mean(x, &z[i], 0.5)?);
    }
    let zk = &z[k as usize];
    let t: Vec<HermitianMatrix> = rule
        .iter()
        .map(|(node, _)| nc_perspective(|v| f_t(node, v), zk, x))
        .collect::<Result<_>>()?;
    let mut sum = HermitianMatrix::zeros(x.dim());
    for ((_, w), tj) in rule.iter().zip(&t) {
        sum = &sum + &tj.scale(w);
    }
    let t_min = sum.scale(-(2f64.powi(k as i32)));
    Ok(MembershipCertificate {
        z,
        t,
        t_min,
        rule,
        k,
    })
}

impl MembershipCertificate {
    /// Assignment for `op_rel_entr_epi_cone` at (X, Y, T); T_1 absorbs the
    /// difference between T and `t_min` so that the equality constraint holds.
    pub fn assignment(
        &self,
        sys: &LinearMatrixSystem,
        x: &HermitianMatrix,
        y: &HermitianMatrix,
        t: &HermitianMatrix,
    ) -> Result<Assignment> {
        let mut a = Assignment::new();
        a.insert(sys.require("X")?, x.clone());
        a.insert(sys.require("Y")?, y.clone());
        a.insert(sys.require("T")?, t.clone());
        for (i, zi) in self.z.iter().enumerate() {
            a.insert(sys.require(&format!("Z{i}"))?, zi.clone());
        }
        let w1 = self.rule.weights()[0];
        let shift = (t - &self.t_min).scale(-(0.5f64.powi(self.k as i32)) / w1);
        for (j, tj) in self.t.iter().enumerate() {
            let v = if j == 0 { tj + &shift } else { tj.clone() };
            a.insert(sys.require(&format!("T{}", j + 1))?, v);
        }
        Ok(a)
    }
}

const MEMBERSHIP_TOL: f64 = 1e-9;
const SOLVER_MEMBERSHIP_TOL: f64 = 1e-7;

/// Whether T ⪰ −P_{r_{m,k}}(Y, X), decided either from the explicit
/// certificate or from matrix functions.
pub fn check_membership(
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    t: &HermitianMatrix,
    m: usize,
    k: u32,
    method: MembershipMethod,
) -> Result<bool> {
    require_pd(x, "X")?;
    require_pd(y, "Y")?;
    if t.dim() != x.dim() || y.dim() != x.dim() {
        return Err(Error::Shape("X, Y and T must have the same order".into()));
    }
    match method {
        MembershipMethod::Oracle => {
            let r = RationalApproximant::log(m, k)?;
            let p = r.perspective(y, x)?;
            (t + &p).is_psd(MEMBERSHIP_TOL)
        }
        MembershipMethod::Certificate => {
            let sys = super::op_rel_entr_epi_cone(x.dim(), m, k)?;
            let cert = build_certificate(x, y, m, k)?;
            let a = cert.assignment(&sys, x, y, t)?;
            Ok(sys.evaluate(&a)?.satisfied(MEMBERSHIP_TOL))
        }
        MembershipMethod::Solver => {
            let s = smallest_shift(x, y, t, m, k)?;
            Ok(s <= SOLVER_MEMBERSHIP_TOL * t.frobenius_norm().max(1.0))
        }
    }
}

/// The SDP minimizing s subject to (X, Y, T + sI) in the cone, with X and Y fixed.
pub fn shift_sdp(x: &HermitianMatrix, y: &HermitianMatrix, t: &HermitianMatrix, m: usize, k: u32) -> Result<CompiledSdp> {
    let n = x.dim();
    let mut sys = LinearMatrixSystem::new();
    let xv = sys.declare("X", n, VarRole::Input);
    let yv = sys.declare("Y", n, VarRole::Input);
    let sv = sys.declare("s", 1, VarRole::Input);
    let te = AffineExpr::hermitian(t).plus(&sys.expr(sv).kron_identity_right(n));
    let (xe, ye) = (sys.expr(xv), sys.expr(yv));
    super::push_op_rel_entr(&mut sys, "", &xe, &ye, &te, m, k)?;
    let mut fix = Assignment::new();
    fix.insert(xv, x.clone());
    fix.insert(yv, y.clone());
    compile(&sys, &Objective::minimize(sys.expr(sv)), &fix)
}

/// min { s : (X, Y, T + sI) lies in the cone }, which equals λ_max(−P − T).
pub fn smallest_shift(
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    t: &HermitianMatrix,
    m: usize,
    k: u32,
) -> Result<f64> {
    let compiled = shift_sdp(x, y, t, m, k)?;
    let sol = compiled.solve(&SdpOptions::default())?;
    if sol.status != SdpStatus::Optimal {
        return Err(Error::Convergence {
            method: "interior-point membership test",
            residual: sol.primal_infeasibility.max(sol.dual_infeasibility),
        });
    }
    Ok(compiled.objective_value(&sol.y))
}
