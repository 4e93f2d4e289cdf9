//! LMI descriptions of hypographs and perspectives of f_t, geometric-mean
//! chains, and the operator relative entropy cone.

mod certificate;
mod system;

pub use certificate::{build_certificate, check_membership, shift_sdp, smallest_shift, MembershipCertificate, MembershipMethod};
pub use system::{
    AffineExpr, Assignment, LinearEquality, LinearMatrixSystem, LmiBlock, MapStep, SystemEvaluation, Term,
    VarId, VarRole, VariableDecl,
};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, QuadratureRule};

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain("quadrature node must lie in [0,1]", t));
    }
    Ok(())
}

/// Appends [[X−Y−T, −√t T],[−√t T, Y−tT]] ⪰ 0, i.e. P_{f_t}(X, Y) ⪰ T.
pub fn push_perspective_ft(
    sys: &mut LinearMatrixSystem,
    label: &str,
    t: f64,
    x: &AffineExpr,
    y: &AffineExpr,
    tv: &AffineExpr,
) -> Result<()> {
    check_t(t)?;
    let a = x.clone().minus(y).minus(tv);
    let b = tv.scaled(-t.sqrt());
    let c = y.clone().minus(&tv.scaled(t));
    sys.add_block(LmiBlock::from_upper(label, vec![vec![a, b], vec![c]])?)
}

/// Appends [[A − T, −T],[−T, B − T]] ⪰ 0 with A = Y/t, B = X/(1−t), i.e.
/// ((1−t)X^{-1} + tY^{-1})^{-1} ⪰ T.
pub fn push_perspective_ft_plus(
    sys: &mut LinearMatrixSystem,
    label: &str,
    t: f64,
    x: &AffineExpr,
    y: &AffineExpr,
    tv: &AffineExpr,
) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::DegenerateParameter(format!(
            "harmonic-mean block needs t in (0,1), got {t}"
        )));
    }
    let a = y.scaled(1.0 / t).minus(tv);
    let b = tv.scaled(-1.0);
    let c = x.scaled(1.0 / (1.0 - t)).minus(tv);
    sys.add_block(LmiBlock::from_upper(label, vec![vec![a, b], vec![c]])?)
}

/// Appends [[A, W],[W, B]] ⪰ 0, i.e. A # B ⪰ W for Hermitian W.
pub fn push_geomean(
    sys: &mut LinearMatrixSystem,
    label: &str,
    a: &AffineExpr,
    w: &AffineExpr,
    b: &AffineExpr,
) -> Result<()> {
    sys.add_block(LmiBlock::from_upper(
        label,
        vec![vec![a.clone(), w.clone()], vec![b.clone()]],
    )?)
}

/// Declares Z_0 … Z_k with Z_0 = Y and blocks [[Z_i, Z_{i+1}],[Z_{i+1}, X]].
/// Then Z_k ⪯ X #_{2^{-k}} Y.
pub fn push_geomean_chain(
    sys: &mut LinearMatrixSystem,
    prefix: &str,
    k: u32,
    x: &AffineExpr,
    y: &AffineExpr,
) -> Result<Vec<VarId>> {
    let n = x.shape().0;
    let z: Vec<VarId> = (0..=k)
        .map(|i| sys.declare(format!("{prefix}Z{i}"), n, VarRole::Auxiliary))
        .collect();
    sys.add_equal(format!("{prefix}Z0=Y"), sys.expr(z[0]), y)?;
    for i in 0..k as usize {
        let (zi, zn) = (sys.expr(z[i]), sys.expr(z[i + 1]));
        push_geomean(sys, &format!("{prefix}geomean{}", i + 1), &zi, &zn, x)?;
    }
    Ok(z)
}

/// Auxiliary variables created by [`push_op_rel_entr`].
#[derive(Clone, Debug)]
pub struct OpRelEntrAux {
    pub z: Vec<VarId>,
    pub t: Vec<VarId>,
    pub rule: QuadratureRule,
}

/// Appends the description of T ⪰ −P_{r_{m,k}}(Y, X) for affine X, Y, T.
pub fn push_op_rel_entr(
    sys: &mut LinearMatrixSystem,
    prefix: &str,
    x: &AffineExpr,
    y: &AffineExpr,
    t: &AffineExpr,
    m: usize,
    k: u32,
) -> Result<OpRelEntrAux> {
    let n = x.shape().0;
    if y.shape() != (n, n) || t.shape() != (n, n) {
        return Err(Error::Shape("X, Y and T must have the same order".into()));
    }
    let rule = gauss_legendre(m)?;
    let z = push_geomean_chain(sys, prefix, k, x, y)?;
    let zk = sys.expr(z[k as usize]);
    let mut tj = Vec::with_capacity(m);
    let mut sum = t.scaled(0.5f64.powi(k as i32));
    for (j, (node, w)) in rule.iter().enumerate() {
        let v = sys.declare(format!("{prefix}T{}", j + 1), n, VarRole::Auxiliary);
        let ve = sys.expr(v);
        push_perspective_ft(sys, &format!("{prefix}perspective{}", j + 1), node, &zk, x, &ve)?;
        sum = sum.plus(&ve.scaled(w));
        tj.push(v);
    }
    sys.add_equality(format!("{prefix}sum wT = -2^-k T"), sum)?;
    Ok(OpRelEntrAux { z, t: tj, rule })
}

/// Variables (X, T) describing f_t(X) ⪰ T.
pub fn hypograph_ft(t: f64, n: usize) -> Result<LinearMatrixSystem> {
    let mut sys = LinearMatrixSystem::new();
    let x = sys.declare("X", n, VarRole::Input);
    let tv = sys.declare("T", n, VarRole::Input);
    let (xe, te) = (sys.expr(x), sys.expr(tv));
    push_perspective_ft(&mut sys, "hypograph", t, &xe, &AffineExpr::identity(n), &te)?;
    Ok(sys)
}

/// Variables (X, Y, T) describing P_{f_t}(X, Y) ⪰ T.
pub fn perspective_ft(t: f64, n: usize) -> Result<LinearMatrixSystem> {
    let mut sys = LinearMatrixSystem::new();
    let ids: Vec<VarId> = ["X", "Y", "T"]
        .iter()
        .map(|s| sys.declare(*s, n, VarRole::Input))
        .collect();
    let e: Vec<AffineExpr> = ids.iter().map(|&v| sys.expr(v)).collect();
    push_perspective_ft(&mut sys, "perspective", t, &e[0], &e[1], &e[2])?;
    Ok(sys)
}

/// Variables (X, Y, T) describing P_{f_t⁺}(X, Y) ⪰ T.
pub fn perspective_ft_plus(t: f64, n: usize) -> Result<LinearMatrixSystem> {
    let mut sys = LinearMatrixSystem::new();
    let ids: Vec<VarId> = ["X", "Y", "T"]
        .iter()
        .map(|s| sys.declare(*s, n, VarRole::Input))
        .collect();
    let e: Vec<AffineExpr> = ids.iter().map(|&v| sys.expr(v)).collect();
    push_perspective_ft_plus(&mut sys, "harmonic", t, &e[0], &e[1], &e[2])?;
    Ok(sys)
}

/// Variables (X, Y, V) with auxiliaries Z_0 … Z_k describing X #_{2^{-k}} Y ⪰ V.
pub fn geomean_chain(k: u32, n: usize) -> Result<LinearMatrixSystem> {
    if k == 0 {
        return Err(Error::DegenerateParameter("geometric-mean chain needs k >= 1".into()));
    }
    let mut sys = LinearMatrixSystem::new();
    let x = sys.declare("X", n, VarRole::Input);
    let y = sys.declare("Y", n, VarRole::Input);
    let v = sys.declare("V", n, VarRole::Input);
    let (xe, ye, ve) = (sys.expr(x), sys.expr(y), sys.expr(v));
    let z = push_geomean_chain(&mut sys, "", k, &xe, &ye)?;
    sys.add_equal("Zk=V", sys.expr(z[k as usize]), &ve)?;
    Ok(sys)
}

/// The cone {(X, Y, T) : T ⪰ −P_{r_{m,k}}(Y, X)} with m + k blocks of order 2n.
pub fn op_rel_entr_epi_cone(n: usize, m: usize, k: u32) -> Result<LinearMatrixSystem> {
    let mut sys = LinearMatrixSystem::new();
    let x = sys.declare("X", n, VarRole::Input);
    let y = sys.declare("Y", n, VarRole::Input);
    let t = sys.declare("T", n, VarRole::Input);
    let (xe, ye, te) = (sys.expr(x), sys.expr(y), sys.expr(t));
    push_op_rel_entr(&mut sys, "", &xe, &ye, &te, m, k)?;
    Ok(sys)
}

/// Variables (Y, U) describing r_{m,k}(Y) ⪰ U.
pub fn matrix_hypograph_rmk(n: usize, m: usize, k: u32) -> Result<LinearMatrixSystem> {
    let mut sys = LinearMatrixSystem::new();
    let y = sys.declare("Y", n, VarRole::Input);
    let u = sys.declare("U", n, VarRole::Input);
    let (ye, ue) = (sys.expr(y), sys.expr(u));
    push_op_rel_entr(&mut sys, "", &AffineExpr::identity(n), &ye, &ue.scaled(-1.0), m, k)?;
    Ok(sys)
}
