use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use minimax_fom::bench::{run_bench, write_report, BenchConfig};
use minimax_fom::diagnostics::{linear_rate_from_metrics, read_trace_csv, RunStatus};
use minimax_fom::problems::{ConstraintCase, Instance, InstanceSpec};
use minimax_fom::solvers::{run, validate_params, SolverConfig, SolverKind};
use minimax_fom::Error;

/// First-order minimax solvers: instance generation, single runs, benchmarks
/// and certificate checks.
#[derive(Debug, Parser)]
#[command(name = "minimax-fom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random instance and write it as JSON.
    Gen(GenArgs),
    /// Solve one instance and write the per-iteration trace as CSV.
    Run(RunArgs),
    /// Run a benchmark grid described by a JSON config.
    Bench(BenchArgs),
    /// Check the certificate columns of a trace CSV.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Case {
    None,
    Affine,
    Polyhedron,
    Quadratic,
}

impl From<Case> for ConstraintCase {
    fn from(c: Case) -> Self {
        match c {
            Case::None => ConstraintCase::None,
            Case::Affine => ConstraintCase::Affine,
            Case::Polyhedron => ConstraintCase::Polyhedron,
            Case::Quadratic => ConstraintCase::Quadratic,
        }
    }
}

#[derive(Debug, Args)]
struct SpecArgs {
    /// Instance spec as JSON; overrides the individual flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 10.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Regularization weight; defaults to 1/m.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    mu_x: f64,
    #[arg(long, default_value_t = 0.0)]
    mu_y: f64,
    #[arg(long, value_enum, default_value_t = Case::None)]
    case: Case,
}

impl SpecArgs {
    fn spec(&self) -> Result<InstanceSpec, Error> {
        let mut spec = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?
            }
            None => {
                let mut s = InstanceSpec::new(self.n, self.m, self.kappa, self.seed)
                    .with_weights(self.mu_x, self.mu_y)
                    .with_constraints(self.case.into());
                s.lambda = self.lambda;
                s
            }
        };
        if let Ok(v) = std::env::var(minimax_fom::bench::SEED_ENV_VAR) {
            spec.seed = v.trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("{}={v:?} is not an unsigned integer", minimax_fom::bench::SEED_ENV_VAR))
            })?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Instance JSON written by `gen`. Without it an instance is generated
    /// from the spec flags.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecArgs,
    /// mspacm, pp, eg or ogda.
    #[arg(long, default_value = "mspacm")]
    solver: String,
    /// Step size for the baselines.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Trace CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave the wall-time column empty.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Replaces the configured seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; falls back to the config's `output_dir`, then `results`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave the wall-time columns empty.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Trace CSV written by `run`.
    trace: PathBuf,
}

/// Failures reported with exit code 1.
#[derive(Debug)]
enum Outcome {
    Failed(String),
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidConfig(_)
            | Error::InvalidParameter(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::DimensionMismatch { .. }
            | Error::Unsupported(_)
            | Error::MissingSaddle
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run_cmd(a),
        Command::Bench(a) => bench(a),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Outcome::Failed(msg))) => {
            eprintln!("minimax-fom: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("minimax-fom: {e}");
            ExitCode::from(if is_usage_error(&e) { 2 } else { 1 })
        }
    }
}

type CmdResult = Result<Result<(), Outcome>, Error>;

fn write_output(out: Option<&Path>, body: &[u8]) -> Result<(), Error> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, body)?;
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(body)?;
        }
    }
    Ok(())
}

fn gen(a: GenArgs) -> CmdResult {
    let inst = Instance::generate(&a.spec.spec()?)?;
    let mut text = inst.to_json()?;
    text.push('\n');
    write_output(a.out.as_deref(), text.as_bytes())?;
    Ok(Ok(()))
}

fn run_cmd(a: RunArgs) -> CmdResult {
    let inst = match &a.instance {
        Some(path) => Instance::load(path)?,
        None => Instance::generate(&a.spec.spec()?)?,
    };
    let problem = inst.to_problem()?;
    let z0 = inst.initial_point()?;
    let kind = SolverKind::parse(&a.solver, a.eta)?;
    let mut cfg = SolverConfig::standard(&problem, a.sigma)?;
    cfg.outer_tol = a.tol;
    cfg.max_outer = a.max_iters;
    cfg.timing = !a.no_timing;
    cfg.record_iterates = false;
    if kind == SolverKind::Mspacm {
        let cert = validate_params(&problem, &cfg)?;
        if !cert.all_hold() {
            eprintln!(
                "note: convergence conditions not met (sigma {}, vartheta {:.3e}); running anyway",
                cert.sigma, cert.vartheta
            );
        }
    }
    let trace = run(&kind, &problem, &cfg, &z0)?;
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    write_output(a.out.as_deref(), &buf)?;
    eprintln!(
        "{}: {} after {} iterations, final {} {:.3e}",
        kind.name(),
        trace.status.as_str(),
        trace.iterations(),
        trace.metric_kind.as_str(),
        trace.final_metric()
    );
    Ok(match trace.status {
        RunStatus::Converged => Ok(()),
        RunStatus::MaxIters => Err(Outcome::Failed(format!("tolerance {:.1e} not reached within {} iterations", a.tol, a.max_iters))),
        RunStatus::Failed => Err(Outcome::Failed(trace.failure.unwrap_or_else(|| "solver failed".into()))),
    })
}

fn bench(a: BenchArgs) -> CmdResult {
    let mut config = BenchConfig::load(&a.config)?.with_env_seed()?;
    if let Some(seed) = a.seed {
        config = config.with_seed(seed);
    }
    if a.no_timing {
        config.timing = false;
    }
    let config = config.resolved()?;
    let dir = a.out.clone().or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("results"));
    let report = run_bench(&config)?;
    for path in write_report(&report, &dir)? {
        println!("{}", path.display());
    }
    let failed: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.status == RunStatus::Failed)
        .map(|r| format!("{} n={} m={} seed={}", r.solver, r.n, r.m, r.seed))
        .collect();
    Ok(if failed.is_empty() { Ok(()) } else { Err(Outcome::Failed(format!("failed runs: {}", failed.join(", ")))) })
}

fn check(a: CheckArgs) -> CmdResult {
    let file = std::fs::File::open(&a.trace)?;
    let rows = read_trace_csv(file)?;
    let mut bad = Vec::new();
    let columns: [(&str, fn(&minimax_fom::diagnostics::TraceCsvRow) -> Option<bool>); 3] = [
        ("contraction", |r| r.contraction_ok),
        ("residual_bound", |r| r.residual_bound_ok),
        ("gnorm", |r| r.gnorm_ok),
    ];
    for (name, pick) in columns {
        let flags: Vec<(usize, bool)> = rows.iter().filter_map(|r| pick(r).map(|b| (r.k, b))).collect();
        if flags.is_empty() {
            println!("{name}: not recorded");
            continue;
        }
        let failures: Vec<usize> = flags.iter().filter(|(_, b)| !b).map(|(k, _)| *k).collect();
        println!("{name}: {}/{} steps hold", flags.len() - failures.len(), flags.len());
        if let Some(k) = failures.first() {
            bad.push(format!("{name} first fails at k={k}"));
        }
    }
    let metrics: Vec<f64> = rows.iter().map(|r| r.metric).collect();
    match linear_rate_from_metrics(&metrics) {
        Ok(rate) => println!("linear rate: {rate:.4}"),
        Err(e) => println!("linear rate: unavailable ({e})"),
    }
    if let Some(i) = metrics.iter().position(|m| !m.is_finite()) {
        bad.push(format!("non-finite metric at row {i}"));
    }
    Ok(if bad.is_empty() { Ok(()) } else { Err(Outcome::Failed(bad.join("; "))) })
}
