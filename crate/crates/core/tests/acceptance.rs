//! Acceptance gate: thirteen criteria, one PASS/FAIL line each.

use padelmi::cone_factory::{check_membership, op_rel_entr_epi_cone, MembershipMethod};
use padelmi::experiments::rng::InstanceRng;
use padelmi::experiments::{gp, maxent, tracevar, tracevar_model, GpInstance, MaxentInstance};
use padelmi::funceq::{agm, contraction_ratio, funceq_boundary, funceq_cone, log_mean, quadratic_ratio, MeanIteration};
use padelmi::quadrature::*;
use padelmi::quantum::{lift_identity_residual, quantum_entr_hypograph, quantum_rel_entr_epigraph, QreMode};
use padelmi::scalar_approx::{choose_params_log, error_bound_log, log_taylor_coefficient, RationalApproximant};
use padelmi::sdp::{compile, export_sdpa, import_sdpa, CompiledSdp, Objective};
use padelmi::{Assignment, HermitianMatrix};
use std::f64::consts::{E, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn pade_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for m in 1..=5 {
        let r = RationalApproximant::log(m, 0).map_err(|e| e.to_string())?;
        let c = r.taylor_coefficients(2 * m);
        check(c.len() == 2 * m + 1, || format!("m={m}: {} coefficients", c.len()))?;
        for (p, cp) in c.iter().enumerate() {
            let d = (cp - log_taylor_coefficient(p)).abs();
            worst = worst.max(d);
            check(d <= 1e-10, || format!("m={m} order {p}: off by {d:e}"))?;
        }
    }
    Ok(format!("max coefficient deviation {worst:.1e}"))
}

fn bound_domination() -> Outcome {
    let grid = log_grid(1e-3, 1e3, 400);
    let mut tightest = f64::INFINITY;
    for m in 1..=6 {
        for k in 0..=6u32 {
            let r = RationalApproximant::log(m, k).map_err(|e| e.to_string())?;
            for &x in &grid {
                let err = (r.eval_rmk(x).map_err(|e| e.to_string())? - x.ln()).abs();
                let bound = error_bound_log(x, m, k);
                check(err <= bound * (1.0 + 1e-8) + 1e-14, || format!("m={m} k={k} x={x}: {err:e} > {bound:e}"))?;
                if bound > 1e-12 {
                    tightest = tightest.min(bound / err.max(1e-300));
                }
            }
        }
    }
    Ok(format!("min bound/error ratio {tightest:.3}"))
}

fn parameter_guarantee() -> Outcome {
    let (m, k) = choose_params_log(E, 1e-8).map_err(|e| e.to_string())?;
    let r = RationalApproximant::log(m, k).map_err(|e| e.to_string())?;
    let mut sup: f64 = 0.0;
    for x in log_grid(1.0 / E, E, 10_000) {
        sup = sup.max((r.eval_rmk(x).map_err(|e| e.to_string())? - x.ln()).abs());
    }
    check(sup <= 1e-8, || format!("(m,k)=({m},{k}) sup error {sup:e}"))?;
    check(m + k as usize <= 12, || format!("m+k = {}", m + k as usize))?;
    Ok(format!("(m,k)=({m},{k}), sup error {sup:.2e}"))
}

fn representation_equivalence() -> Outcome {
    let mut rng = InstanceRng::new(2024);
    let (mut members, mut tested) = (0, 0);
    while tested < 100 {
        let n = 1 + rng.index(3);
        let (m, k) = (1 + rng.index(3), rng.index(4) as u32);
        let x = rng.pd_matrix(n, true, 0.1);
        let y = rng.pd_matrix(n, true, 0.1);
        let p = RationalApproximant::log(m, k).and_then(|r| r.perspective(&y, &x)).map_err(|e| e.to_string())?;
        let g = rng.gaussian_matrix(n, n, true);
        let e = HermitianMatrix::hermitian_part(&(&g + g.adjoint())).scale(1e-4);
        let shift = HermitianMatrix::identity(n).scale(rng.uniform_in(-2e-3, 2e-3));
        let t = &(&(-&p) + &e) + &shift;
        let margin = (&t + &p).min_eigenvalue().map_err(|e| e.to_string())?;
        if margin.abs() < 1e-6 {
            continue;
        }
        tested += 1;
        let oracle = margin >= 0.0;
        let solver = check_membership(&x, &y, &t, m, k, MembershipMethod::Solver).map_err(|e| e.to_string())?;
        check(solver == oracle, || format!("triple {tested} (n={n}, m={m}, k={k}, margin {margin:e}): solver {solver}, oracle {oracle}"))?;
        members += oracle as usize;
    }
    Ok(format!("100/100 agree ({members} members)"))
}

fn lifting_identity() -> Outcome {
    let mut rng = InstanceRng::new(505);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let n = 1 + i % 4;
        let (a, b) = (rng.pd_matrix(n, true, 0.1), rng.pd_matrix(n, true, 0.1));
        let r = lift_identity_residual(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max(r);
        check(r <= 1e-9, || format!("pair {i}, n={n}: residual {r:e}"))?;
    }
    Ok(format!("max residual {worst:.1e}"))
}

fn operator_concavity() -> Outcome {
    let mut rng = InstanceRng::new(606);
    let mut worst = f64::INFINITY;
    for i in 0..200 {
        let n = 1 + i % 3;
        let (m, k) = (1 + rng.index(3), rng.index(4) as u32);
        let r = RationalApproximant::log(m, k).map_err(|e| e.to_string())?;
        let (x1, y1) = (rng.pd_matrix(n, true, 0.1), rng.pd_matrix(n, true, 0.1));
        let (x2, y2) = (rng.pd_matrix(n, true, 0.1), rng.pd_matrix(n, true, 0.1));
        let run = || -> padelmi::Result<f64> {
            let mid = r.perspective(&(&x1 + &x2).scale(0.5), &(&y1 + &y2).scale(0.5))?;
            let avg = (&r.perspective(&x1, &y1)? + &r.perspective(&x2, &y2)?).scale(0.5);
            (&mid - &avg).min_eigenvalue()
        };
        let lam = run().map_err(|e| e.to_string())?;
        worst = worst.min(lam);
        check(lam >= -1e-9, || format!("test {i}: lambda_min {lam:e}"))?;
    }
    Ok(format!("min eigenvalue {worst:.1e}"))
}

fn variational_trace() -> Outcome {
    let mut parts = Vec::new();
    for (n, seed) in [(2, 1), (3, 2), (4, 3)] {
        let r = tracevar(n, seed, 3, 3).map_err(|e| e.to_string())?;
        check(r.recomputed_gap() <= 1e-4, || format!("n={n}: |p - Tr Y| = {:e} ({})", r.recomputed_gap(), r.solver_status))?;
        parts.push(format!("n={n} {:.1e}", r.recomputed_gap()));
    }
    Ok(parts.join(", "))
}

fn max_entropy() -> Outcome {
    let r = maxent(50, 25, 1, 3, 3).map_err(|e| e.to_string())?;
    check(r.oracle_converged, || "dual Newton did not converge".into())?;
    check(r.recomputed_gap() <= 1e-5, || format!("gap {:e}", r.recomputed_gap()))?;
    Ok(format!("gap {:.2e}, value {:.6}", r.recomputed_gap(), r.oracle_objective))
}

fn geometric_programming() -> Outcome {
    let r = gp(10, 10, 5, 0.3, 1, 3, 3).map_err(|e| e.to_string())?;
    check(r.oracle_converged, || "barrier Newton did not converge".into())?;
    check(r.recomputed_gap() <= 1e-5, || format!("gap {:e}", r.recomputed_gap()))?;
    Ok(format!("gap {:.2e}, value {:.6}", r.recomputed_gap(), r.oracle_objective))
}

fn elliptic_k(x: f64) -> f64 {
    // Composite Gauss-Legendre on [0, π/2] with 64 panels.
    let rule = gauss_legendre(10).expect("rule");
    let panels = 64;
    let h = 0.5 * PI / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        for (t, w) in rule.iter() {
            let th = (p as f64 + t) * h;
            s += w * h / (1.0 - x * x * th.sin().powi(2)).sqrt();
        }
    }
    s
}

fn functional_equations() -> Outcome {
    let (lm, ag) = (MeanIteration::log_mean(), MeanIteration::agm());
    let e = |r: padelmi::Result<f64>| r.map_err(|e| e.to_string());
    for x in log_grid(1e-2, 1e2, 1000) {
        if (x - 1.0).abs() < 1e-9 {
            continue;
        }
        let c = e(contraction_ratio(&lm, x, 1.0))?;
        check((c - 0.5).abs() <= 1e-12, || format!("log-mean ratio {c} at x={x}"))?;
        let a = e(contraction_ratio(&ag, x, 1.0))?;
        let q = e(quadratic_ratio(&ag, x, 1.0))?;
        check(a <= 0.5 && q <= 0.125, || format!("AGM ratios {a}, {q} at x={x}"))?;
    }
    let mut worst_elliptic: f64 = 0.0;
    for x in [0.1, 0.5, 0.9] {
        let r = (agm(1.0 + x, 1.0 - x) * 2.0 / PI * elliptic_k(x) - 1.0).abs();
        worst_elliptic = worst_elliptic.max(r);
        check(r <= 1e-8, || format!("AGM-elliptic residual {r:e} at x={x}"))?;
    }
    let mut worst_cone: f64 = 0.0;
    for (x, y) in [(2.0, 1.0), (E, 1.0), (0.5, 3.0)] {
        for (it, exact) in [(&lm, log_mean(x, y)), (&ag, agm(x, y))] {
            let b = e(funceq_boundary(it, 2, 3, x, y))?;
            worst_cone = worst_cone.max((b - exact).abs());
            check((b - exact).abs() <= 1e-3, || format!("{} boundary {b} vs {exact} at ({x},{y})", it.name))?;
        }
    }
    Ok(format!("elliptic residual {worst_elliptic:.1e}, cone deviation {worst_cone:.1e}"))
}

fn quadrature_exactness() -> Outcome {
    let binom_central = |p: u32| (1..=p).fold(1.0, |acc, i| acc * (p + i) as f64 / i as f64);
    let mut worst: f64 = 0.0;
    let mut exact = |r: &QuadratureRule, moment: &dyn Fn(u32) -> f64, label: &str| -> Result<(), String> {
        for p in 0..(2 * r.order() as u32) {
            let d = (r.moment(p) - moment(p)).abs();
            worst = worst.max(d);
            check(d <= 1e-12, || format!("{label} m={} degree {p}: {d:e}", r.order()))?;
        }
        Ok(())
    };
    for m in 1..=20 {
        let r = gauss_legendre(m).map_err(|e| e.to_string())?;
        exact(&r, &|p| 1.0 / (p as f64 + 1.0), "legendre")?;
        let r = gauss_arcsine(m).map_err(|e| e.to_string())?;
        exact(&r, &|p| binom_central(p) / 4f64.powi(p as i32), "arcsine")?;
    }
    for m in 1..=6 {
        let r = gauss_from_density(&LebesgueDensity, m, default_discretization(m)).map_err(|e| e.to_string())?;
        exact(&r, &|p| 1.0 / (p as f64 + 1.0), "lebesgue density")?;
    }
    let mut stieltjes: f64 = 0.0;
    for m in 1..=6 {
        let a = gauss_from_density(&ArcsineDensity, m, default_discretization(m)).map_err(|e| e.to_string())?;
        let b = gauss_arcsine(m).map_err(|e| e.to_string())?;
        for j in 0..m {
            let d = (a.nodes()[j] - b.nodes()[j]).abs().max((a.weights()[j] - b.weights()[j]).abs());
            stieltjes = stieltjes.max(d);
            check(d <= 1e-8, || format!("arcsine Stieltjes vs closed form, m={m} node {j}: {d:e}"))?;
        }
    }
    Ok(format!("max moment error {worst:.1e}, Stieltjes deviation {stieltjes:.1e}"))
}

fn sign_and_antisymmetry() -> Outcome {
    let grid = log_grid(1e-3, 1e3, 2001);
    for m in 1..=8 {
        let r = RationalApproximant::log(m, 0).map_err(|e| e.to_string())?;
        for &x in &grid {
            let (v, l) = (r.eval_rm(x), x.ln());
            if x <= 1.0 {
                check(v >= l - 1e-12, || format!("m={m}: r({x}) = {v} < log = {l}"))?;
            } else {
                check(v <= l + 1e-12, || format!("m={m}: r({x}) = {v} > log = {l}"))?;
            }
            let s = (r.eval_rm(1.0 / x) + v).abs();
            check(s <= 1e-12, || format!("m={m}: r(1/x) + r(x) = {s:e} at x={x}"))?;
        }
    }
    Ok("m = 1..8 on 2001 points".into())
}

fn compiled_systems() -> padelmi::Result<Vec<(String, CompiledSdp)>> {
    let mut out = Vec::new();
    let mut rng = InstanceRng::new(77);
    let (x, y) = (rng.pd_matrix(2, true, 0.2), rng.pd_matrix(2, true, 0.2));
    let t = HermitianMatrix::identity(2);
    out.push(("shift".into(), padelmi::cone_factory::shift_sdp(&x, &y, &t, 3, 2)?));
    let sys = op_rel_entr_epi_cone(2, 2, 2)?;
    let mut fix = Assignment::new();
    fix.insert(sys.require("X")?, x.clone());
    fix.insert(sys.require("Y")?, y.clone());
    let tr = sys.expr(sys.require("T")?).trace()?;
    out.push(("op_rel_entr".into(), compile(&sys, &Objective::minimize(tr), &fix)?));
    for mode in [QreMode::Full, QreMode::Reduced] {
        let sys = quantum_rel_entr_epigraph(2, 2, 1, mode)?;
        let mut fix = Assignment::new();
        fix.insert(sys.require("A")?, x.clone());
        fix.insert(sys.require("B")?, y.clone());
        let tau = sys.expr(sys.require("tau")?);
        out.push((format!("qre {mode:?}"), compile(&sys, &Objective::minimize(tau), &fix)?));
    }
    let sys = quantum_entr_hypograph(2, 2, 2)?;
    let mut fix = Assignment::new();
    fix.insert(sys.require("rho")?, x.clone());
    let tau = sys.expr(sys.require("tau")?);
    out.push(("entropy".into(), compile(&sys, &Objective::maximize(tau), &fix)?));
    for it in [MeanIteration::log_mean(), MeanIteration::agm()] {
        let sys = funceq_cone(&it, 2, 2)?;
        let mut fix = Assignment::new();
        fix.insert(sys.require("x")?, HermitianMatrix::scalar(2.0));
        fix.insert(sys.require("y")?, HermitianMatrix::scalar(1.0));
        let tau = sys.expr(sys.require("tau")?);
        out.push((format!("funceq {}", it.name), compile(&sys, &Objective::maximize(tau), &fix)?));
    }
    out.push(("maxent".into(), MaxentInstance::generate(8, 3, 1)?.model(2, 2)?.compile()?));
    out.push(("gp".into(), GpInstance::generate(3, 2, 3, 0.5, 1)?.model(2, 1)?.compile()?));
    out.push(("tracevar".into(), tracevar_model(&rng.density_matrix(2, true), 2, 1)?.compile()?));
    Ok(out)
}

fn sdpa_round_trip() -> Outcome {
    let systems = compiled_systems().map_err(|e| e.to_string())?;
    for (name, c) in &systems {
        let text = export_sdpa(&c.problem);
        let back = import_sdpa(&text).map_err(|e| format!("{name}: {e}"))?;
        check(back == c.problem, || format!("{name}: imported problem differs"))?;
        check(export_sdpa(&back) == text, || format!("{name}: re-export differs"))?;
    }
    Ok(format!("{} systems", systems.len()))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 13] = [
        ("Pade equivalence", 1, pade_equivalence),
        ("error-bound domination", 5, bound_domination),
        ("parameter guarantee", 2, parameter_guarantee),
        ("representation equivalence", 60, representation_equivalence),
        ("lifting identity", 10, lifting_identity),
        ("operator concavity", 30, operator_concavity),
        ("variational trace", 120, variational_trace),
        ("max entropy", 60, max_entropy),
        ("geometric programming", 60, geometric_programming),
        ("functional equations", 10, functional_equations),
        ("quadrature exactness", 2, quadrature_exactness),
        ("sign and antisymmetry", 1, sign_and_antisymmetry),
        ("SDPA round-trip", 2, sdpa_round_trip),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(*limit);
        let (tag, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; exceeded {limit} s")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if tag == "FAIL" {
            failures += 1;
        }
        println!("{tag} {:>2} {name} ({:.2} s, limit {limit} s): {detail}", i + 1, elapsed.as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
