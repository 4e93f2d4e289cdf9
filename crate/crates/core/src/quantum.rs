//! Quantum relative entropy, von Neumann entropy and Tr[σ log ρ] through the
//! operator relative entropy cone.

use crate::cone_factory::{
    push_geomean_chain, push_op_rel_entr, AffineExpr, Assignment, LinearMatrixSystem, LmiBlock,
    VarRole,
};
use crate::error::{Error, Result};
use crate::hermitian::{kron_hermitian, op_rel_entr, phi_map, quantum_rel_entr, vec_identity, HermitianMatrix};
use crate::quadrature::gauss_legendre;
use crate::sdp::{compile, Objective, SdpOptions};

/// A Hermitian matrix with optional positivity and unit-trace guarantees.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityLikeMatrix {
    matrix: HermitianMatrix,
    positive: bool,
    unit_trace: bool,
}

impl DensityLikeMatrix {
    /// Checks λ_min > 0 when `positive` and |Tr − 1| ≤ 1e-12 when `unit_trace`.
    pub fn new(matrix: HermitianMatrix, positive: bool, unit_trace: bool) -> Result<Self> {
        if positive {
            let lam = matrix.min_eigenvalue()?;
            if lam <= 0.0 {
                return Err(Error::domain("matrix must be positive definite", lam));
            }
        }
        if unit_trace && (matrix.trace() - 1.0).abs() > 1e-12 {
            return Err(Error::domain("matrix must have unit trace", matrix.trace()));
        }
        Ok(DensityLikeMatrix {
            matrix,
            positive,
            unit_trace,
        })
    }

    /// A positive definite, unit-trace state.
    pub fn state(matrix: HermitianMatrix) -> Result<Self> {
        Self::new(matrix, true, true)
    }

    /// (M + δI) / Tr(M + δI), for rank-deficient inputs.
    pub fn regularized(matrix: &HermitianMatrix, delta: f64) -> Result<Self> {
        let m = matrix + &HermitianMatrix::identity(matrix.dim()).scale(delta);
        let tr = m.trace();
        Self::new(m.scale(1.0 / tr), true, true)
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    pub fn is_unit_trace(&self) -> bool {
        self.unit_trace
    }
}

fn require_pd(a: &HermitianMatrix, name: &str) -> Result<()> {
    let lam = a.min_eigenvalue()?;
    if lam <= 0.0 {
        return Err(Error::domain(format!("{name} must be positive definite"), lam));
    }
    Ok(())
}

/// D(A‖B) = Tr[A(log A − log B)] by eigendecomposition.
pub fn qre_oracle(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    require_pd(a, "A")?;
    require_pd(b, "B")?;
    quantum_rel_entr(a, b)
}

/// |D(A‖B) − φ(D_op(A ⊗ I ‖ I ⊗ B̄))|.
pub fn lift_identity_residual(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!("orders {} and {} differ", a.dim(), b.dim())));
    }
    let n = a.dim();
    let i = HermitianMatrix::identity(n);
    let x = kron_hermitian(a, &i);
    let y = if b.is_real() { kron_hermitian(&i, b) } else { kron_hermitian(&i, &b.conj()) };
    let lifted = phi_map(&op_rel_entr(&x, &y)?)?;
    Ok((qre_oracle(a, b)? - lifted).abs())
}

/// Size of the representation of the quantum relative entropy epigraph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QreMode {
    /// m + k blocks of order 2n².
    Full,
    /// m blocks of order n² + 1 and k blocks of order 2n².
    Reduced,
}

/// System in (A, B, tau) feasible iff tau ≥ the approximate D(A‖B).
pub fn quantum_rel_entr_epigraph(n: usize, m: usize, k: u32, mode: QreMode) -> Result<LinearMatrixSystem> {
    if n == 0 || m == 0 {
        return Err(Error::DegenerateParameter("n and m must be positive".into()));
    }
    let mut sys = LinearMatrixSystem::new();
    let a = sys.declare("A", n, VarRole::Input);
    let b = sys.declare("B", n, VarRole::Input);
    let tau = sys.declare("tau", 1, VarRole::Input);
    let x = sys.expr(a).kron_identity_right(n);
    let y = sys.expr(b).kron_identity_left_conj(n);
    let w = vec_identity(n);
    let wt = w.adjoint();
    let tau_e = sys.expr(tau);
    match mode {
        QreMode::Full => {
            let t = sys.declare("T", n * n, VarRole::Auxiliary);
            let te = sys.expr(t);
            push_op_rel_entr(&mut sys, "", &x, &y, &te, m, k)?;
            let phi = te.left(&wt)?.right(&w)?;
            sys.add_block(LmiBlock::scalar("phi(T) <= tau", tau_e.minus(&phi))?)?;
        }
        QreMode::Reduced => {
            let rule = gauss_legendre(m)?;
            let z = push_geomean_chain(&mut sys, "", k, &x, &y)?;
            let zk = sys.expr(z[k as usize]);
            let xw = x.right(&w)?;
            let wxw = xw.left(&wt)?;
            let mut total = tau_e.clone();
            for (j, (t, wj)) in rule.iter().enumerate() {
                let tj = sys.declare(format!("tau{}", j + 1), 1, VarRole::Auxiliary);
                let tje = sys.expr(tj);
                let corner = x.clone().plus(&zk.clone().minus(&x).scaled(t));
                let last = wxw.clone().minus(&tje.scaled(t));
                sys.add_block(LmiBlock::from_upper(
                    format!("schur{}", j + 1),
                    vec![vec![corner, xw.clone()], vec![last]],
                )?)?;
                total = total.plus(&tje.scaled(wj * 2f64.powi(k as i32)));
            }
            sys.add_block(LmiBlock::scalar("tau bound", total)?)?;
        }
    }
    Ok(sys)
}

/// System in (rho, tau) feasible iff tau ≤ the approximate −Tr[ρ log ρ].
pub fn quantum_entr_hypograph(n: usize, m: usize, k: u32) -> Result<LinearMatrixSystem> {
    let mut sys = LinearMatrixSystem::new();
    let rho = sys.declare("rho", n, VarRole::Input);
    let tau = sys.declare("tau", 1, VarRole::Input);
    let t = sys.declare("T", n, VarRole::Auxiliary);
    let (re, te) = (sys.expr(rho), sys.expr(t));
    push_op_rel_entr(&mut sys, "", &re, &AffineExpr::identity(n), &te, m, k)?;
    let bound = te.trace()?.scaled(-1.0).minus(&sys.expr(tau));
    sys.add_block(LmiBlock::scalar("tau <= -Tr T", bound)?)?;
    Ok(sys)
}

/// System in (rho, tau) feasible iff tau ≤ Tr[σ U] for some U ⪯ r_{m,k}(ρ).
pub fn trace_logm_epigraph(sigma: &HermitianMatrix, n: usize, m: usize, k: u32) -> Result<LinearMatrixSystem> {
    if sigma.dim() != n {
        return Err(Error::Shape(format!("sigma has order {}, expected {n}", sigma.dim())));
    }
    if !sigma.is_psd(1e-12)? {
        return Err(Error::domain("sigma must be positive semidefinite", sigma.min_eigenvalue()?));
    }
    let mut sys = LinearMatrixSystem::new();
    let rho = sys.declare("rho", n, VarRole::Input);
    let tau = sys.declare("tau", 1, VarRole::Input);
    let u = sys.declare("U", n, VarRole::Auxiliary);
    let (re, ue) = (sys.expr(rho), sys.expr(u));
    push_op_rel_entr(&mut sys, "", &AffineExpr::identity(n), &re, &ue.scaled(-1.0), m, k)?;
    let pairing = ue.left(sigma.as_matrix())?.trace()?;
    sys.add_block(LmiBlock::scalar("tau <= Tr sigma U", pairing.minus(&sys.expr(tau)))?)?;
    Ok(sys)
}

const BOUNDARY_ACCURACY: f64 = 1e-7;

fn boundary(
    sys: &LinearMatrixSystem,
    fixed: &[(&str, &HermitianMatrix)],
    maximize: bool,
    opts: &SdpOptions,
) -> Result<f64> {
    let mut fix = Assignment::new();
    for (name, v) in fixed {
        fix.insert(sys.require(name)?, (*v).clone());
    }
    let tau = sys.expr(sys.require("tau")?);
    let obj = if maximize { Objective::maximize(tau) } else { Objective::minimize(tau) };
    let compiled = compile(sys, &obj, &fix)?;
    let sol = compiled.solve(opts)?;
    if !sol.accurate_to(BOUNDARY_ACCURACY) {
        return Err(Error::Convergence {
            method: "interior-point boundary search",
            residual: sol.primal_infeasibility.max(sol.dual_infeasibility),
        });
    }
    Ok(compiled.objective_value(&sol.y))
}

fn default_opts(total: usize) -> SdpOptions {
    SdpOptions {
        max_block_dim: total.max(400),
        ..SdpOptions::default()
    }
}

/// Smallest feasible tau in the relative entropy epigraph at fixed (A, B).
pub fn qre_boundary(a: &HermitianMatrix, b: &HermitianMatrix, m: usize, k: u32, mode: QreMode) -> Result<f64> {
    require_pd(a, "A")?;
    require_pd(b, "B")?;
    let sys = quantum_rel_entr_epigraph(a.dim(), m, k, mode)?;
    let total = 2 * sys.block_sizes().iter().sum::<usize>();
    boundary(&sys, &[("A", a), ("B", b)], false, &default_opts(total))
}

/// Largest feasible tau in the entropy hypograph at fixed ρ.
pub fn entropy_boundary(rho: &HermitianMatrix, m: usize, k: u32) -> Result<f64> {
    require_pd(rho, "rho")?;
    let sys = quantum_entr_hypograph(rho.dim(), m, k)?;
    boundary(&sys, &[("rho", rho)], true, &SdpOptions::default())
}

/// Largest feasible tau in the Tr[σ log ρ] hypograph at fixed ρ.
pub fn trace_logm_boundary(sigma: &HermitianMatrix, rho: &HermitianMatrix, m: usize, k: u32) -> Result<f64> {
    require_pd(rho, "rho")?;
    let sys = trace_logm_epigraph(sigma, rho.dim(), m, k)?;
    boundary(&sys, &[("rho", rho)], true, &SdpOptions::default())
}
