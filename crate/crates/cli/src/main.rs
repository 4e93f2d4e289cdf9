use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use padelmi::cone_factory::{check_membership, shift_sdp, smallest_shift, MembershipMethod};
use padelmi::experiments::{
    self, approx_error, log_grid, tracevar_model, ExperimentReport, GpInstance, MaxentInstance,
};
use padelmi::sdp::{export_sdpa, import_sdpa, CompiledSdp};
use padelmi::HermitianMatrix;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "padelmi", version, about = "Rational approximations of the matrix logarithm as linear matrix inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum entropy subject to seeded random linear equalities.
    Maxent {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 50)]
        n: usize,
        /// Number of equality constraints (defaults to n/2).
        #[arg(long)]
        ell: Option<usize>,
    },
    /// Seeded random geometric program.
    Gp {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        ell: usize,
        #[arg(long, default_value_t = 5)]
        terms: usize,
        /// Fraction of variables appearing in each monomial.
        #[arg(long, default_value_t = 0.3)]
        sparsity: f64,
    },
    /// Tr Y recovered as max Tr X − D(X‖Y) for a seeded density matrix Y.
    Tracevar {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Table of |r_{m,k}(x) − log x| and its a priori bound.
    ApproxError {
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 4])]
        m: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0u32, 1, 2, 3])]
        k: Vec<u32>,
        #[arg(long, default_value_t = 1e-3)]
        lo: f64,
        #[arg(long, default_value_t = 1e3)]
        hi: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// CSV output path; CSV goes to stdout when neither --csv nor --json is given.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Fail when some error exceeds this value.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Decides whether a JSON triple (X, Y, T) lies in the approximate cone.
    Membership {
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        k: u32,
        /// Also run the interior-point shift test.
        #[arg(long)]
        solver: bool,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Compiles a problem and writes it in sparse SDPA format.
    ExportSdpa {
        #[arg(value_enum)]
        problem: ExportProblem,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        k: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long, default_value_t = 5)]
        terms: usize,
        #[arg(long, default_value_t = 0.3)]
        sparsity: f64,
        /// JSON triple, required for the membership problem.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 3)]
    k: u32,
    /// Seed of the first instance.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of instances, with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    instances: usize,
    /// Largest accepted gap between the SDP and oracle objectives.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Worker threads for independent instances.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportProblem {
    Maxent,
    Gp,
    Tracevar,
    Membership,
}

/// Row-major Hermitian matrix with separate real and imaginary parts.
#[derive(Serialize, Deserialize)]
struct JsonMatrix {
    n: usize,
    re: Vec<f64>,
    #[serde(default)]
    im: Vec<f64>,
}

impl JsonMatrix {
    fn to_hermitian(&self, name: &str) -> Result<HermitianMatrix> {
        let im = if self.im.is_empty() { vec![0.0; self.n * self.n] } else { self.im.clone() };
        HermitianMatrix::from_parts(self.n, &self.re, &im).with_context(|| format!("matrix {name}"))
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "UPPERCASE")]
struct Triple {
    x: JsonMatrix,
    y: JsonMatrix,
    t: JsonMatrix,
}

impl Triple {
    fn read(path: &Path) -> Result<(HermitianMatrix, HermitianMatrix, HermitianMatrix)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let t: Triple = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok((t.x.to_hermitian("X")?, t.y.to_hermitian("Y")?, t.t.to_hermitian("T")?))
    }
}

#[derive(Serialize)]
struct MembershipReport {
    m: usize,
    k: u32,
    n: usize,
    member: bool,
    certificate: bool,
    oracle: bool,
    solver: Option<bool>,
    shift: Option<f64>,
    agree: bool,
}

enum Outcome {
    Success,
    Violation(String),
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Violation(msg)) => {
            eprintln!("tolerance violation: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Maxent { run, n, ell } => {
            let ell = ell.unwrap_or(n / 2);
            let (m, k) = (run.m, run.k);
            experiment(&run, 1e-5, |seed| experiments::maxent(n, ell, seed, m, k))
        }
        Command::Gp { run, n, ell, terms, sparsity } => {
            let (m, k) = (run.m, run.k);
            experiment(&run, 1e-5, |seed| experiments::gp(n, ell, terms, sparsity, seed, m, k))
        }
        Command::Tracevar { run, n } => {
            let (m, k) = (run.m, run.k);
            experiment(&run, 1e-4, |seed| experiments::tracevar(n, seed, m, k))
        }
        Command::ApproxError { m, k, lo, hi, points, csv, json, tol } => {
            let rows = approx_error(&m, &k, &log_grid(lo, hi, points)?)?;
            if let Some(path) = &csv {
                write_csv(csv::Writer::from_path(path)?, &rows)?;
            }
            if let Some(path) = &json {
                std::fs::write(path, serde_json::to_string_pretty(&rows)?)?;
            }
            if csv.is_none() && json.is_none() {
                write_csv(csv::Writer::from_writer(std::io::stdout()), &rows)?;
            }
            let over_bound = rows.iter().filter(|r| r.error > r.bound * (1.0 + 1e-8) + 1e-14).count();
            if over_bound > 0 {
                return Ok(Outcome::Violation(format!("{over_bound} rows exceed the error bound")));
            }
            if let Some(tol) = tol {
                let worst = rows.iter().map(|r| r.error).fold(0.0, f64::max);
                if worst > tol {
                    return Ok(Outcome::Violation(format!("largest error {worst:e} > {tol:e}")));
                }
            }
            Ok(Outcome::Success)
        }
        Command::Membership { input, m, k, solver, json } => {
            let (x, y, t) = Triple::read(&input)?;
            let certificate = check_membership(&x, &y, &t, m, k, MembershipMethod::Certificate)?;
            let oracle = check_membership(&x, &y, &t, m, k, MembershipMethod::Oracle)?;
            let shift = if solver { Some(smallest_shift(&x, &y, &t, m, k)?) } else { None };
            let solver_member = if solver {
                Some(check_membership(&x, &y, &t, m, k, MembershipMethod::Solver)?)
            } else {
                None
            };
            let agree = certificate == oracle && solver_member.is_none_or(|s| s == oracle);
            let report = MembershipReport {
                m,
                k,
                n: x.dim(),
                member: oracle,
                certificate,
                oracle,
                solver: solver_member,
                shift,
                agree,
            };
            println!("member: {}", report.member);
            println!("certificate: {certificate}");
            println!("oracle: {oracle}");
            if let (Some(s), Some(v)) = (solver_member, shift) {
                println!("solver: {s} (shift {v:e})");
            }
            if let Some(path) = json {
                std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
            }
            if agree {
                Ok(Outcome::Success)
            } else {
                Ok(Outcome::Violation("membership methods disagree".into()))
            }
        }
        Command::ExportSdpa { problem, out, m, k, seed, n, ell, terms, sparsity, input } => {
            let compiled: CompiledSdp = match problem {
                ExportProblem::Maxent => {
                    let n = n.unwrap_or(50);
                    MaxentInstance::generate(n, ell.unwrap_or(n / 2), seed)?.model(m, k)?.compile()?
                }
                ExportProblem::Gp => {
                    GpInstance::generate(n.unwrap_or(10), ell.unwrap_or(10), terms, sparsity, seed)?
                        .model(m, k)?
                        .compile()?
                }
                ExportProblem::Tracevar => {
                    let y = padelmi::experiments::rng::InstanceRng::new(seed).density_matrix(n.unwrap_or(2), true);
                    tracevar_model(&y, m, k)?.compile()?
                }
                ExportProblem::Membership => {
                    let path = input.ok_or_else(|| anyhow!("the membership problem needs --input"))?;
                    let (x, y, t) = Triple::read(&path)?;
                    shift_sdp(&x, &y, &t, m, k)?
                }
            };
            let text = export_sdpa(&compiled.problem);
            std::fs::write(&out, &text).with_context(|| format!("writing {}", out.display()))?;
            let back = import_sdpa(&text)?;
            println!(
                "wrote {} ({} variables, {} blocks)",
                out.display(),
                compiled.problem.num_vars(),
                compiled.problem.blocks.len()
            );
            if back == compiled.problem {
                println!("round-trip: ok");
                Ok(Outcome::Success)
            } else {
                Ok(Outcome::Violation("SDPA round-trip changed the problem".into()))
            }
        }
    }
}

fn write_csv<W: std::io::Write>(mut w: csv::Writer<W>, rows: &[experiments::ApproxErrorRow]) -> Result<()> {
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn experiment<F>(args: &RunArgs, default_tol: f64, job: F) -> Result<Outcome>
where
    F: Fn(u64) -> padelmi::Result<ExperimentReport> + Sync,
{
    if args.instances == 0 {
        bail!("--instances must be positive");
    }
    let tol = args.tol.unwrap_or(default_tol);
    let seeds: Vec<u64> = (0..args.instances as u64).map(|i| args.seed + i).collect();
    let reports = run_parallel(&seeds, args.jobs.max(1), &job)?;
    for r in &reports {
        println!(
            "{} n={} ell={} seed={} m={} k={} sdp={:.12} oracle={:.12} gap={:.3e} time={:.3}s status={}",
            r.name,
            r.n,
            r.ell.map_or("-".into(), |v| v.to_string()),
            r.seed.map_or("-".into(), |v| v.to_string()),
            r.m,
            r.k,
            r.sdp_objective,
            r.oracle_objective,
            r.recomputed_gap(),
            r.wall_time_s,
            r.solver_status
        );
    }
    if let Some(path) = &args.json {
        let text = if let [single] = reports.as_slice() {
            serde_json::to_string_pretty(single)?
        } else {
            serde_json::to_string_pretty(&reports)?
        };
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    let bad: Vec<String> = reports
        .iter()
        .filter(|r| !r.within(tol))
        .map(|r| {
            let seed = r.seed.map_or("-".into(), |s| s.to_string());
            if r.oracle_converged {
                format!("gap {:.3e} > {tol:e} (seed {seed})", r.recomputed_gap())
            } else {
                format!("oracle did not converge (seed {seed})")
            }
        })
        .collect();
    if bad.is_empty() {
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::Violation(bad.join("; ")))
    }
}

fn run_parallel<F>(seeds: &[u64], jobs: usize, job: &F) -> Result<Vec<ExperimentReport>>
where
    F: Fn(u64) -> padelmi::Result<ExperimentReport> + Sync,
{
    let chunk = seeds.len().div_ceil(jobs);
    let results: Vec<padelmi::Result<ExperimentReport>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&s| job(s)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    });
    results.into_iter().map(|r| r.map_err(anyhow::Error::from)).collect()
}
