use padelmi::experiments::rng::InstanceRng;
use padelmi::quantum::*;
use padelmi::scalar_approx::{error_bound_log, RationalApproximant};
use padelmi::HermitianMatrix;

const D_DIAG: f64 = 0.058_891_517_828_191_9;

fn diag_pair() -> (HermitianMatrix, HermitianMatrix) {
    (
        HermitianMatrix::diag(&[0.5, 0.5]),
        HermitianMatrix::diag(&[1.0 / 3.0, 2.0 / 3.0]),
    )
}

fn state(rng: &mut InstanceRng, n: usize) -> HermitianMatrix {
    rng.density_matrix(n, true)
}

#[test]
fn oracle_examples() {
    let i3 = HermitianMatrix::identity(3).scale(1.0 / 3.0);
    assert!(qre_oracle(&i3, &i3).unwrap().abs() < 1e-15);
    let (a, b) = diag_pair();
    assert!((qre_oracle(&a, &b).unwrap() - 0.5 * (9.0f64 / 8.0).ln()).abs() < 1e-15);
    assert!((0.5 * (9.0f64 / 8.0).ln() - D_DIAG).abs() < 1e-15);
    let mut rng = InstanceRng::new(71);
    for n in 1..=4 {
        let (p, q) = (state(&mut rng, n), state(&mut rng, n));
        assert!(qre_oracle(&p, &q).unwrap() >= -1e-12);
    }
    assert!(qre_oracle(&HermitianMatrix::diag(&[1.0, 0.0]), &i3).is_err());
}

#[test]
fn lifting_identity() {
    let h = HermitianMatrix::identity(2).scale(0.5);
    assert!(lift_identity_residual(&h, &h).unwrap() < 1e-15);
    let (a, b) = diag_pair();
    assert!(lift_identity_residual(&a, &b).unwrap() <= 1e-12);
    let mut rng = InstanceRng::new(73);
    let a = rng.pd_matrix(3, true, 0.1);
    let b = rng.pd_matrix(3, true, 0.1);
    assert!(lift_identity_residual(&a, &b).unwrap() <= 1e-9);
    assert!(lift_identity_residual(&a, &h).is_err());
}

#[test]
fn density_like_checks() {
    let h = HermitianMatrix::identity(2).scale(0.5);
    assert!(DensityLikeMatrix::state(h.clone()).is_ok());
    assert!(DensityLikeMatrix::state(h.scale(2.0)).is_err());
    assert!(DensityLikeMatrix::new(HermitianMatrix::diag(&[1.0, -1.0]), true, false).is_err());
    let pure = HermitianMatrix::diag(&[1.0, 0.0]);
    let r = DensityLikeMatrix::regularized(&pure, 1e-8).unwrap();
    assert!((r.matrix().trace() - 1.0).abs() < 1e-15);
    assert!(r.is_positive() && r.is_unit_trace());
}

#[test]
fn block_accounting() {
    for (n, m, k) in [(2, 3, 3), (3, 2, 1), (2, 1, 0)] {
        let full = quantum_rel_entr_epigraph(n, m, k, QreMode::Full).unwrap();
        let sizes = full.block_sizes();
        assert_eq!(sizes.iter().filter(|&&s| s == 2 * n * n).count(), m + k as usize);
        assert_eq!(sizes.iter().filter(|&&s| s == 1).count(), 1);
        assert_eq!(sizes.len(), m + k as usize + 1);

        let red = quantum_rel_entr_epigraph(n, m, k, QreMode::Reduced).unwrap();
        let sizes = red.block_sizes();
        assert_eq!(sizes.iter().filter(|&&s| s == n * n + 1).count(), m);
        assert_eq!(sizes.iter().filter(|&&s| s == 2 * n * n).count(), k as usize);
        assert_eq!(sizes.iter().filter(|&&s| s == 1).count(), 1);
        assert_eq!(sizes.len(), m + k as usize + 1);

        let ent = quantum_entr_hypograph(n, m, k).unwrap();
        assert_eq!(ent.block_sizes().iter().filter(|&&s| s == 2 * n).count(), m + k as usize);
    }
}

#[test]
fn epigraph_boundaries_on_examples() {
    let h = HermitianMatrix::identity(2).scale(0.5);
    for mode in [QreMode::Full, QreMode::Reduced] {
        assert!(qre_boundary(&h, &h, 3, 3, mode).unwrap().abs() < 1e-7);
        let (a, b) = diag_pair();
        let tau = qre_boundary(&a, &b, 3, 3, mode).unwrap();
        assert!(tau < D_DIAG + 1e-3 && tau > D_DIAG - 1e-3);
        assert!((tau - D_DIAG).abs() < 1e-7);
    }
}

#[test]
fn full_and_reduced_agree() {
    let mut rng = InstanceRng::new(79);
    for i in 0..50 {
        let (m, k) = (1 + i % 3, (i % 3) as u32);
        let a = state(&mut rng, 2);
        let b = state(&mut rng, 2);
        let full = qre_boundary(&a, &b, m, k, QreMode::Full).unwrap();
        let red = qre_boundary(&a, &b, m, k, QreMode::Reduced).unwrap();
        assert!((full - red).abs() < 1e-6, "{full} vs {red}");
    }
}

#[test]
fn boundary_error_within_scalar_bound() {
    let mut rng = InstanceRng::new(83);
    for (n, m, k) in [(2, 2, 1), (2, 3, 2), (3, 1, 2)] {
        let (lo, hi) = (0.5, 2.0);
        let a0 = rng.pd_with_spectrum(n, true, lo, hi);
        let b0 = rng.pd_with_spectrum(n, true, lo, hi);
        let (a, b) = (a0.scale(1.0 / a0.trace()), b0.scale(1.0 / b0.trace()));
        let kappa = (hi / lo) * (hi / lo);
        let bound = error_bound_log(kappa, m, k).max(error_bound_log(1.0 / kappa, m, k));
        let tau = qre_boundary(&a, &b, m, k, QreMode::Reduced).unwrap();
        let exact = qre_oracle(&a, &b).unwrap();
        assert!((tau - exact).abs() <= n as f64 * bound + 1e-7, "{tau} {exact} {bound}");
    }
}

#[test]
fn boundary_is_jointly_convex() {
    let mut rng = InstanceRng::new(89);
    for _ in 0..5 {
        let (a1, b1) = (state(&mut rng, 2), state(&mut rng, 2));
        let (a2, b2) = (state(&mut rng, 2), state(&mut rng, 2));
        let f = |a: &HermitianMatrix, b: &HermitianMatrix| qre_boundary(a, b, 2, 2, QreMode::Reduced).unwrap();
        let mid = f(&(&a1 + &a2).scale(0.5), &(&b1 + &b2).scale(0.5));
        assert!(mid <= 0.5 * (f(&a1, &b1) + f(&a2, &b2)) + 1e-8);
    }
}

#[test]
fn entropy_examples() {
    let h = HermitianMatrix::identity(2).scale(0.5);
    let tau = entropy_boundary(&h, 3, 3).unwrap();
    assert!(tau >= 2f64.ln() - 1e-4);
    assert!((tau - 2f64.ln()).abs() < 1e-6);
    let pure = DensityLikeMatrix::regularized(&HermitianMatrix::diag(&[1.0, 0.0]), 1e-8).unwrap();
    assert!(entropy_boundary(pure.matrix(), 3, 3).unwrap() < 0.01);
    let mut rng = InstanceRng::new(97);
    let rho = state(&mut rng, 3);
    assert!(entropy_boundary(&rho, 3, 3).unwrap() >= -1.0);
}

#[test]
fn trace_logm_examples() {
    let i2 = HermitianMatrix::identity(2);
    let tau = trace_logm_boundary(&i2, &i2, 3, 3).unwrap();
    assert!(tau.abs() < 1e-7 && tau < 1e-3);
    let sigma = HermitianMatrix::diag(&[1.0, 0.0]);
    let rho = HermitianMatrix::diag(&[std::f64::consts::E, 1.0]);
    let tau = trace_logm_boundary(&sigma, &rho, 3, 3).unwrap();
    assert!(tau >= 0.99);
    let expected = RationalApproximant::log(3, 3).unwrap().eval_rmk(std::f64::consts::E).unwrap();
    assert!((tau - expected).abs() < 1e-7);
    let doubled = trace_logm_boundary(&sigma.scale(2.0), &rho, 3, 3).unwrap();
    assert!((doubled - 2.0 * tau).abs() < 1e-7);
    assert!(trace_logm_epigraph(&HermitianMatrix::diag(&[1.0, -0.1]), 2, 3, 3).is_err());
}
