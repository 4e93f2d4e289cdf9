use padelmi::experiments::rng::InstanceRng;
use padelmi::sdp::import_sdpa;
use padelmi::{HermitianMatrix, RationalApproximant};
use serde_json::{json, Value};
use std::path::Path;
use std::process::{Command, Output};
use tempfile::tempdir;

fn padelmi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_padelmi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn encode(a: &HermitianMatrix) -> Value {
    let n = a.dim();
    let (mut re, mut im) = (Vec::new(), Vec::new());
    for i in 0..n {
        for j in 0..n {
            re.push(a.get(i, j).re);
            im.push(a.get(i, j).im);
        }
    }
    json!({ "n": n, "re": re, "im": im })
}

fn write_triple(path: &Path, x: &HermitianMatrix, y: &HermitianMatrix, t: &HermitianMatrix) {
    let v = json!({ "X": encode(x), "Y": encode(y), "T": encode(t) });
    std::fs::write(path, v.to_string()).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn maxent_writes_a_flat_report() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("maxent.json");
    let o = padelmi(&["maxent", "--n", "8", "--ell", "3", "--seed", "4", "--json", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&path);
    assert_eq!(r["name"], "maxent");
    assert_eq!(r["n"], 8);
    assert_eq!(r["ell"], 3);
    assert_eq!(r["seed"], 4);
    let (s, q) = (r["sdp_objective"].as_f64().unwrap(), r["oracle_objective"].as_f64().unwrap());
    assert_eq!(r["gap"].as_f64().unwrap(), (s - q).abs());
    assert!(r["gap"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn several_instances_in_parallel_are_reproducible() {
    let dir = tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let base = ["maxent", "--n", "6", "--ell", "2", "--instances", "4"];
    let run = |path: &Path, jobs: &str| {
        let mut args = base.to_vec();
        args.extend(["--jobs", jobs, "--json", path.to_str().unwrap()]);
        assert_eq!(padelmi(&args).status.code(), Some(0));
        read_json(path)
    };
    let (ra, rb) = (run(&a, "1"), run(&b, "3"));
    let (ra, rb) = (ra.as_array().unwrap(), rb.as_array().unwrap());
    assert_eq!(ra.len(), 4);
    for (x, y) in ra.iter().zip(rb) {
        assert_eq!(x["seed"], y["seed"]);
        let d = x["sdp_objective"].as_f64().unwrap() - y["sdp_objective"].as_f64().unwrap();
        assert!(d.abs() <= 1e-12);
    }
}

#[test]
fn tolerance_violation_exits_with_two() {
    let o = padelmi(&["tracevar", "--n", "2", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tolerance violation"));
}

#[test]
fn gp_and_tracevar_succeed_on_default_instances() {
    let o = padelmi(&["gp"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("gp n=10 ell=10 seed=1"));
    let o = padelmi(&["tracevar", "--n", "2", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn approx_error_csv_and_json() {
    let dir = tempdir().unwrap();
    let (csv, js) = (dir.path().join("t.csv"), dir.path().join("t.json"));
    let o = padelmi(&[
        "approx-error", "--m", "1,2,3", "--k", "0,2", "--lo", "0.1", "--hi", "10", "--points", "3",
        "--csv", csv.to_str().unwrap(), "--json", js.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,k,x,error,bound");
    assert_eq!(lines.len(), 1 + 3 * 2 * 3);
    let rows = read_json(&js);
    assert_eq!(rows.as_array().unwrap().len(), 18);
    let middle = &rows[1];
    assert!((middle["x"].as_f64().unwrap() - 1.0).abs() < 1e-15);
    assert!(middle["error"].as_f64().unwrap() < 1e-15);

    let o = padelmi(&["approx-error", "--m", "1", "--k", "0", "--points", "5", "--tol", "1e-12"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("m,k,x,error,bound"));
}

#[test]
fn membership_identity_triple() {
    let dir = tempdir().unwrap();
    let (input, out) = (dir.path().join("id.json"), dir.path().join("r.json"));
    let id = HermitianMatrix::identity(2);
    write_triple(&input, &id, &id, &HermitianMatrix::zeros(2));
    let o = padelmi(&["membership", input.to_str().unwrap(), "--solver", "--json", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("member: true"));
    let r = read_json(&out);
    assert_eq!(r["agree"], true);
    assert_eq!(r["solver"], true);
}

#[test]
fn membership_methods_agree_near_the_boundary() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("t.json");
    let mut rng = InstanceRng::new(5);
    let (x, y) = (rng.pd_matrix(2, true, 0.3), rng.pd_matrix(2, true, 0.3));
    let p = RationalApproximant::log(2, 2).unwrap().perspective(&y, &x).unwrap();
    for (delta, member) in [(1e-4, true), (-1e-4, false)] {
        let t = &(-&p) + &HermitianMatrix::identity(2).scale(delta);
        write_triple(&input, &x, &y, &t);
        let o = padelmi(&["membership", input.to_str().unwrap(), "--m", "2", "--k", "2", "--solver"]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        assert!(stdout(&o).contains(&format!("member: {member}")));
    }
}

#[test]
fn malformed_json_is_an_error() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("bad.json");
    std::fs::write(&input, "{\"X\": [1, 2").unwrap();
    let o = padelmi(&["membership", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parsing"));
    let o = padelmi(&["membership", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn export_then_import_round_trips() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("p.dat-s");
    for problem in [vec!["maxent", "--n", "6", "--ell", "2"], vec!["gp", "--n", "3", "--ell", "2"], vec!["tracevar"]] {
        let mut args = vec!["export-sdpa"];
        args.extend(problem.iter().copied());
        args.extend(["--out", out.to_str().unwrap(), "--m", "2", "--k", "1"]);
        let o = padelmi(&args);
        assert_eq!(o.status.code(), Some(0), "{problem:?}");
        assert!(stdout(&o).contains("round-trip: ok"));
        let text = std::fs::read_to_string(&out).unwrap();
        let p = import_sdpa(&text).unwrap();
        assert_eq!(padelmi::sdp::export_sdpa(&p), text);
    }
    let o = padelmi(&["export-sdpa", "membership", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
