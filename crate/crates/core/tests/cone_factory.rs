use padelmi::cone_factory::*;
use padelmi::experiments::rng::InstanceRng;
use padelmi::hermitian::{geometric_mean, nc_perspective};
use padelmi::scalar_approx::{f_t, RationalApproximant};
use padelmi::HermitianMatrix;

fn assign(sys: &LinearMatrixSystem, pairs: &[(&str, HermitianMatrix)]) -> Assignment {
    pairs
        .iter()
        .map(|(n, v)| (sys.require(n).unwrap(), v.clone()))
        .collect()
}

fn s(x: f64) -> HermitianMatrix {
    HermitianMatrix::scalar(x)
}

#[test]
fn hypograph_boundary_and_trivial_point() {
    let sys = hypograph_ft(0.5, 1).unwrap();
    assert_eq!(sys.block_sizes(), vec![2]);
    let e = sys.evaluate(&assign(&sys, &[("X", s(2.0)), ("T", s(2.0 / 3.0))])).unwrap();
    assert!(e.block_min_eigs[0].abs() < 1e-15);
    let sys3 = hypograph_ft(0.3, 3).unwrap();
    let a = assign(&sys3, &[("X", HermitianMatrix::identity(3)), ("T", HermitianMatrix::zeros(3))]);
    let b = sys3.blocks()[0].evaluate(&a).unwrap();
    let expected = HermitianMatrix::diag(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    assert!((&b - &expected).frobenius_norm() < 1e-15);
}

#[test]
fn hypograph_rejects_perturbed_value() {
    let mut rng = InstanceRng::new(2);
    for t in [0.0, 0.2, 0.5, 1.0] {
        let sys = hypograph_ft(t, 3).unwrap();
        let x = rng.pd_matrix(3, true, 0.2);
        let fx = x.matrix_function(|v| f_t(t, v), padelmi::hermitian::Domain::Positive).unwrap();
        let on = sys.evaluate(&assign(&sys, &[("X", x.clone()), ("T", fx.clone())])).unwrap();
        assert!(on.satisfied(1e-9));
        let above = &fx + &HermitianMatrix::identity(3).scale(1e-6);
        let off = sys.evaluate(&assign(&sys, &[("X", x), ("T", above)])).unwrap();
        assert!(!off.satisfied(1e-9));
    }
}

#[test]
fn perspective_examples() {
    let sys = perspective_ft(0.5, 1).unwrap();
    let e = sys
        .evaluate(&assign(&sys, &[("X", s(2.0)), ("Y", s(1.0)), ("T", s(2.0 / 3.0))]))
        .unwrap();
    assert!(e.block_min_eigs[0].abs() < 1e-15);
    let sys2 = perspective_ft(0.4, 2).unwrap();
    let y = HermitianMatrix::diag(&[2.0, 3.0]);
    let e = sys2
        .evaluate(&assign(&sys2, &[("X", y.clone()), ("Y", y), ("T", HermitianMatrix::zeros(2))]))
        .unwrap();
    assert!(e.satisfied(0.0));
    let plus = perspective_ft_plus(0.5, 1).unwrap();
    let e = plus
        .evaluate(&assign(&plus, &[("X", s(2.0)), ("Y", s(1.0)), ("T", s(4.0 / 3.0))]))
        .unwrap();
    assert!(e.block_min_eigs[0].abs() < 1e-14);
    assert!(perspective_ft_plus(0.0, 1).is_err());
    assert!(perspective_ft_plus(1.0, 1).is_err());
}

#[test]
fn harmonic_block_matches_harmonic_mean() {
    let mut rng = InstanceRng::new(17);
    let sys = perspective_ft_plus(0.3, 3).unwrap();
    let x = rng.pd_matrix(3, true, 0.2);
    let y = rng.pd_matrix(3, true, 0.2);
    let h = (&x.inv().unwrap().scale(0.7) + &y.inv().unwrap().scale(0.3)).inv().unwrap();
    let on = sys.evaluate(&assign(&sys, &[("X", x.clone()), ("Y", y.clone()), ("T", h.clone())])).unwrap();
    assert!(on.satisfied(1e-9));
    assert!(on.block_min_eigs[0] < 1e-9);
    let off = &h + &HermitianMatrix::identity(3).scale(1e-6);
    let e = sys.evaluate(&assign(&sys, &[("X", x), ("Y", y), ("T", off)])).unwrap();
    assert!(!e.satisfied(1e-9));
}

#[test]
fn geomean_chain_scalar_certificate() {
    let sys = geomean_chain(2, 1).unwrap();
    assert!(geomean_chain(0, 1).is_err());
    let a = assign(
        &sys,
        &[("X", s(1.0)), ("Y", s(16.0)), ("V", s(2.0)), ("Z0", s(16.0)), ("Z1", s(4.0)), ("Z2", s(2.0))],
    );
    let e = sys.evaluate(&a).unwrap();
    assert!(e.satisfied(1e-12));
    assert!(e.equality_residuals.iter().all(|r| *r == 0.0));
}

#[test]
fn geomean_chain_random_certificate() {
    let mut rng = InstanceRng::new(23);
    let (k, n) = (3u32, 3);
    let sys = geomean_chain(k, n).unwrap();
    let x = rng.pd_matrix(n, true, 0.2);
    let y = rng.pd_matrix(n, true, 0.2);
    let mut pairs = vec![("X".to_string(), x.clone()), ("Y".to_string(), y.clone())];
    let mut z = y.clone();
    pairs.push(("Z0".into(), z.clone()));
    for i in 1..=k {
        z = geometric_mean(&x, &z, 0.5).unwrap();
        pairs.push((format!("Z{i}"), z.clone()));
    }
    let v = geometric_mean(&x, &y, 0.125).unwrap();
    assert!((&v - &z).frobenius_norm() < 1e-10);
    pairs.push(("V".into(), z));
    let a: Assignment = pairs.iter().map(|(n, m)| (sys.require(n).unwrap(), m.clone())).collect();
    assert!(sys.evaluate(&a).unwrap().satisfied(1e-9));
}

#[test]
fn cone_structure() {
    for (n, m, k) in [(1, 3, 3), (2, 2, 0), (3, 1, 4)] {
        let sys = op_rel_entr_epi_cone(n, m, k).unwrap();
        assert_eq!(sys.blocks().len(), m + k as usize);
        assert!(sys.block_sizes().iter().all(|&b| b == 2 * n));
        assert_eq!(sys.equalities().len(), 2);
        assert_eq!(sys.variables().len(), 3 + m + k as usize + 1);
    }
    let hyp = matrix_hypograph_rmk(2, 3, 2).unwrap();
    assert_eq!(hyp.blocks().len(), 5);
}

#[test]
fn blocks_are_hermitian_for_random_assignments() {
    let mut rng = InstanceRng::new(31);
    let sys = op_rel_entr_epi_cone(3, 2, 2).unwrap();
    let a: Assignment = sys
        .var_ids()
        .map(|v| {
            let g = rng.gaussian_matrix(3, 3, true);
            (v, HermitianMatrix::hermitian_part(&g))
        })
        .collect();
    assert!(sys.blocks_are_hermitian(&a, 1e-14).unwrap());
}

#[test]
fn identity_triple_is_a_member() {
    let i = HermitianMatrix::identity(2);
    let z = HermitianMatrix::zeros(2);
    for method in [MembershipMethod::Certificate, MembershipMethod::Oracle] {
        assert!(check_membership(&i, &i, &z, 3, 3, method).unwrap());
        assert!(!check_membership(&i, &i, &i.scale(-1e-4), 3, 3, method).unwrap());
    }
    let cert = build_certificate(&i, &i, 3, 3).unwrap();
    assert!(cert.z.iter().all(|z| (z - &i).frobenius_norm() < 1e-15));
    assert!(cert.t.iter().all(|t| t.frobenius_norm() < 1e-15));
    assert!(cert.t_min.frobenius_norm() < 1e-15);
}

#[test]
fn scalar_certificate_chain() {
    let cert = build_certificate(&s(1.0), &s(4.0), 2, 2).unwrap();
    let vals: Vec<f64> = cert.z.iter().map(|z| z.trace()).collect();
    assert!((vals[0] - 4.0).abs() < 1e-15);
    assert!((vals[1] - 2.0).abs() < 1e-15);
    assert!((vals[2] - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn scalar_membership_near_minus_one() {
    let (x, y) = (s(1.0), s(std::f64::consts::E));
    for method in [MembershipMethod::Certificate, MembershipMethod::Oracle] {
        assert!(check_membership(&x, &y, &s(-1.0 + 1e-8), 3, 3, method).unwrap());
        assert!(!check_membership(&x, &y, &s(-1.01), 3, 3, method).unwrap());
    }
}

#[test]
fn random_certificates_satisfy_every_block() {
    let mut rng = InstanceRng::new(41);
    let sys = op_rel_entr_epi_cone(3, 3, 2).unwrap();
    let r = RationalApproximant::log(3, 2).unwrap();
    for _ in 0..5 {
        let x = rng.pd_matrix(3, true, 0.2);
        let y = rng.pd_matrix(3, true, 0.2);
        let cert = build_certificate(&x, &y, 3, 2).unwrap();
        let p = r.perspective(&y, &x).unwrap();
        let rel = (&cert.t_min + &p).frobenius_norm() / p.frobenius_norm().max(1.0);
        assert!(rel < 1e-9);
        let a = cert.assignment(&sys, &x, &y, &cert.t_min).unwrap();
        let e = sys.evaluate(&a).unwrap();
        assert!(e.min_margin() >= -1e-9);
        assert!(e.equality_residuals.iter().all(|r| *r < 1e-12));
    }
}

#[test]
fn certificate_rejects_non_pd() {
    let bad = HermitianMatrix::diag(&[1.0, -1.0]);
    assert!(build_certificate(&bad, &HermitianMatrix::identity(2), 1, 1).is_err());
}

#[test]
fn methods_agree_on_random_triples() {
    let mut rng = InstanceRng::new(43);
    let mut agree = 0;
    for i in 0..100 {
        let n = 1 + i % 3;
        let m = 1 + i % 3;
        let k = (i / 3 % 4) as u32;
        let x = rng.pd_matrix(n, true, 0.2);
        let y = rng.pd_matrix(n, true, 0.2);
        let p = RationalApproximant::log(m, k).unwrap().perspective(&y, &x).unwrap();
        let delta = if rng.uniform() < 0.5 { 1e-3 } else { -1e-3 };
        let t = &(-&p) + &HermitianMatrix::identity(n).scale(delta);
        let a = check_membership(&x, &y, &t, m, k, MembershipMethod::Certificate).unwrap();
        let b = check_membership(&x, &y, &t, m, k, MembershipMethod::Oracle).unwrap();
        assert_eq!(a, delta > 0.0);
        agree += usize::from(a == b);
    }
    assert_eq!(agree, 100);
}

#[test]
fn hypograph_rmk_boundary() {
    let sys = matrix_hypograph_rmk(2, 1, 1).unwrap();
    let y = HermitianMatrix::diag(&[4.0, 1.0]);
    let u = HermitianMatrix::diag(&[4.0 / 3.0, 0.0]);
    let i = HermitianMatrix::identity(2);
    let cert = build_certificate(&i, &y, 1, 1).unwrap();
    assert!((&cert.t_min + &u).frobenius_norm() < 1e-14);
    let mut a = assign(&sys, &[("Y", y.clone()), ("U", u.clone())]);
    for (j, z) in cert.z.iter().enumerate() {
        a.insert(sys.require(&format!("Z{j}")).unwrap(), z.clone());
    }
    a.insert(sys.require("T1").unwrap(), cert.t[0].clone());
    assert!(sys.evaluate(&a).unwrap().satisfied(1e-12));
    let r = RationalApproximant::log(1, 1).unwrap();
    let above = &r.eval_matrix(&y).unwrap() + &i.scale(1e-6);
    assert!(!check_membership(&i, &y, &(-&above), 1, 1, MembershipMethod::Oracle).unwrap());
}

#[test]
fn joint_concavity_of_perspective() {
    let mut rng = InstanceRng::new(47);
    for i in 0..40 {
        let n = 1 + i % 3;
        let r = RationalApproximant::log(1 + i % 3, (i % 4) as u32).unwrap();
        let (x1, y1) = (rng.pd_matrix(n, true, 0.1), rng.pd_matrix(n, true, 0.1));
        let (x2, y2) = (rng.pd_matrix(n, true, 0.1), rng.pd_matrix(n, true, 0.1));
        let mid = r
            .perspective(&(&x1 + &x2).scale(0.5), &(&y1 + &y2).scale(0.5))
            .unwrap();
        let avg = (&r.perspective(&x1, &y1).unwrap() + &r.perspective(&x2, &y2).unwrap()).scale(0.5);
        assert!((&mid - &avg).min_eigenvalue().unwrap() >= -1e-9);
    }
}

#[test]
fn perspective_monotone_in_first_argument() {
    let mut rng = InstanceRng::new(53);
    for m in 1..=4 {
        let r = RationalApproximant::log(m, 0).unwrap();
        let x = rng.pd_matrix(3, true, 0.2);
        let v2 = rng.pd_matrix(3, true, 0.2);
        let v1 = &v2 + &rng.pd_matrix(3, true, 0.0);
        let g = |v: f64| r.eval_rm(v);
        let p1 = nc_perspective(g, &v1, &x).unwrap();
        let p2 = nc_perspective(g, &v2, &x).unwrap();
        assert!((&p1 - &p2).min_eigenvalue().unwrap() >= -1e-9);
    }
}

#[test]
fn undeclared_variables_are_rejected() {
    let mut sys = LinearMatrixSystem::new();
    let foreign = AffineExpr::var(VarId(7), 2);
    assert!(matches!(
        sys.add_equality("bad", foreign),
        Err(padelmi::Error::UndeclaredVariable(_))
    ));
    assert!(sys.require("X").is_err());
}
