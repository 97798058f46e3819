use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use matphi::config::SEED_ENV;
use matphi::formats::{emit, read_json, to_json, BooleanFunctionFile, EnsembleFile, EtaInput, RandomMatrixFile};
use matphi::search::{self, LsiParams};
use matphi::{analyze, generate_instance, run_suite, DimRange, Error, Format, GenerateParams, InstanceKind, RunConfig, Suite};
use matphi_core::holevo::EtaOptions;
use matphi_core::PhiFunction;

/// Numerical checks for matrix Φ-entropies and matrix concentration.
///
/// COMMAND is a suite (characterizations, efron-stein, poincare, gaussian,
/// fourier, sobolev, holevo, frechet, all) or one of: entropy --in FILE,
/// fourier --in FILE, holevo --in FILE, eta --in FILE,
/// search <lsi-counterexample|eta>, generate <KIND>.
#[derive(Debug, Parser)]
#[command(name = "matphi", version)]
struct Cli {
    command: String,
    /// Search or instance kind.
    kind: Option<String>,
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Monte Carlo samples for the Gaussian checks.
    #[arg(long)]
    samples: Option<u64>,
    /// Extra absolute slack for judging violations.
    #[arg(long)]
    tol: Option<f64>,
    /// Dimension or inclusive range, e.g. `2` or `1..3`.
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Kernel outputs for `generate kernel` (defaults to n).
    #[arg(long)]
    m: Option<usize>,
    /// power:P, xlogx, x2, affine:a,b (x3 as a negative control).
    #[arg(long)]
    phi: Option<String>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// json or csv
    #[arg(long)]
    format: Option<String>,
    /// Search restarts.
    #[arg(long)]
    restarts: Option<u64>,
    /// Hill-climbing steps per restart.
    #[arg(long)]
    steps: Option<usize>,
}

impl Cli {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut c = RunConfig::default();
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(t) = self.trials {
            c.trials = t;
        }
        if let Some(s) = self.samples {
            c.samples = s;
        }
        c.tol = self.tol;
        if let Some(d) = &self.d {
            c.d = d.parse()?;
        }
        if let Some(n) = self.n {
            c.n = n;
        }
        if let Some(p) = &self.phi {
            c.phi = PhiFunction::parse(p)?;
        }
        if let Some(j) = self.jobs {
            c.jobs = j;
        }
        if let Some(f) = &self.format {
            c.format = f.parse()?;
        }
        c.out = self.out.clone();
        Ok(c)
    }

    fn input(&self) -> Result<&Path, Error> {
        self.input.as_deref().ok_or_else(|| Error::Config(format!("`{}` needs --in FILE", self.command)))
    }
}

enum Outcome {
    Pass,
    Fail,
}

fn run_suite_command(cfg: &RunConfig, suite: Suite) -> Result<Outcome, Error> {
    let report = run_suite(cfg, suite)?;
    let text = match cfg.format {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv()?,
    };
    emit(cfg.out.as_deref(), &text)?;
    for r in report.failing() {
        eprintln!("FAIL {} d={} n={}{}: {} violations, max gap {:?}", r.check, r.d, r.n, r.phi.as_deref().map(|p| format!(" phi={p}")).unwrap_or_default(), r.violation_count, r.max_gap);
    }
    eprintln!("{} {}: {} checks, {} failing", if report.pass { "PASS" } else { "FAIL" }, suite, report.reports.len(), report.failing().count());
    Ok(if report.pass { Outcome::Pass } else { Outcome::Fail })
}

fn eta_command(cli: &Cli, cfg: &RunConfig) -> Result<Outcome, Error> {
    let input: EtaInput = read_json(cli.input()?)?;
    let defaults = EtaOptions::default();
    let opts = EtaOptions {
        d: if cli.d.is_some() { cfg.d.lo } else { defaults.d },
        restarts: cli.restarts.unwrap_or(defaults.restarts),
        steps: cli.steps.unwrap_or(defaults.steps),
        seed: cfg.seed,
        ..defaults
    };
    let s = search::eta(&input, opts, cfg.jobs)?;
    emit(cfg.out.as_deref(), &to_json(&s)?)?;
    eprintln!("{}", s.line());
    Ok(Outcome::Pass)
}

fn lsi_command(cli: &Cli, cfg: &RunConfig) -> Result<Outcome, Error> {
    let p = LsiParams {
        d: if cli.d.is_some() { cfg.d.lo } else { 2 },
        n: cli.n.unwrap_or(1),
        restarts: cli.restarts.unwrap_or(20),
        steps: cli.steps.unwrap_or(2000),
        seed: cfg.seed,
        jobs: cfg.jobs,
    };
    let s = search::lsi_counterexample(p)?;
    emit(cfg.out.as_deref(), &to_json(&s)?)?;
    eprintln!("{}", s.line());
    Ok(Outcome::Pass)
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let cfg = cli.config()?;
    let verdict = |pass: bool| if pass { Outcome::Pass } else { Outcome::Fail };
    match cli.command.as_str() {
        "entropy" => {
            let file: RandomMatrixFile = read_json(cli.input()?)?;
            emit(cfg.out.as_deref(), &to_json(&analyze::entropy(&file, &cfg.phi)?)?)?;
            Ok(Outcome::Pass)
        }
        "fourier" if cli.input.is_some() => {
            let file: BooleanFunctionFile = read_json(cli.input()?)?;
            let a = analyze::fourier(&file, cfg.seed)?;
            emit(cfg.out.as_deref(), &to_json(&a)?)?;
            Ok(verdict(a.pass))
        }
        "holevo" if cli.input.is_some() => {
            let file: EnsembleFile = read_json(cli.input()?)?;
            let a = analyze::holevo(&file, cfg.seed)?;
            emit(cfg.out.as_deref(), &to_json(&a)?)?;
            Ok(verdict(a.pass))
        }
        "eta" => eta_command(cli, &cfg),
        "search" => match cli.kind.as_deref() {
            Some("lsi-counterexample") => lsi_command(cli, &cfg),
            Some("eta") => eta_command(cli, &cfg),
            other => Err(Error::Config(format!("unknown search {other:?} (expected lsi-counterexample or eta)"))),
        },
        "generate" => {
            let kind: InstanceKind = cli.kind.as_deref().ok_or_else(|| Error::Config("generate needs a kind".into()))?.parse()?;
            let d = match &cli.d {
                Some(s) => s.parse::<DimRange>()?.lo,
                None => 2,
            };
            let n = cli.n.unwrap_or(2);
            let params = GenerateParams { d, n, m: cli.m.unwrap_or(n) };
            emit(cfg.out.as_deref(), &generate_instance(kind, params, cfg.seed)?)?;
            Ok(Outcome::Pass)
        }
        name => run_suite_command(&cfg, name.parse()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
