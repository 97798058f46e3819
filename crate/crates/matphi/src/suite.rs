//! Suite orchestration: which checks run for which suite, and the report
//! that comes out.

use std::time::Instant;

use matphi_core::characterizations::run_all;
use matphi_core::report::{CheckReport, Meta};
use matphi_core::suites as s;
use matphi_core::PhiFunction;
use serde::Serialize;

use crate::config::{ConfigEcho, RunConfig, Suite};
use crate::error::Result;
use crate::exec::{with_jobs, Rayon};
use crate::formats::{reports_csv, to_json, CheckReportJson};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Trials for the η checks, whose every trial is itself a search.
const ETA_TRIALS: u64 = 10;

type Job<'a> = Box<dyn Fn() -> matphi_core::Result<Vec<CheckReport>> + Send + Sync + 'a>;

struct Task<'a> {
    label: String,
    /// Used to build a failing report if the task errors out.
    meta: Meta,
    job: Job<'a>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub task: String,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Runtime {
    pub jobs: usize,
    pub total_millis: f64,
    pub timings: Vec<Timing>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub version: String,
    pub suite: Suite,
    pub config: ConfigEcho,
    /// Sorted by check name, then `d`, `n` and Φ.
    pub reports: Vec<CheckReportJson>,
    pub pass: bool,
    pub notes: Vec<String>,
    /// Wall-clock fields; everything else is a function of the config.
    pub runtime: Runtime,
}

impl SuiteReport {
    pub fn failing(&self) -> impl Iterator<Item = &CheckReportJson> {
        self.reports.iter().filter(|r| !r.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    /// The JSON report without the `runtime` section, for comparisons.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(o) = v.as_object_mut() {
            o.remove("runtime");
        }
        to_json(&v)
    }

    pub fn to_csv(&self) -> Result<String> {
        reports_csv(&self.reports)
    }
}

fn task<'a>(label: String, meta: Meta, job: impl Fn() -> matphi_core::Result<Vec<CheckReport>> + Send + Sync + 'a) -> Task<'a> {
    Task { label, meta, job: Box::new(job) }
}

fn one<'a>(
    name: &str,
    d: usize,
    n: usize,
    cfg: &RunConfig,
    f: impl Fn() -> matphi_core::Result<CheckReport> + Send + Sync + 'a,
) -> Task<'a> {
    let label = format!("{name} d={d}");
    task(label, Meta::new(name, d, n, cfg.seed), move || f().map(|r| vec![r]))
}

fn tasks<'a>(suite: Suite, cfg: &'a RunConfig) -> Vec<Task<'a>> {
    let (seed, trials, n, samples) = (cfg.seed, cfg.trials, cfg.n, cfg.samples);
    let phi: &'a PhiFunction = &cfg.phi;
    let ex = &Rayon;
    let mut out = Vec::new();
    let wants = |s: Suite| suite == s || suite == Suite::All;

    if wants(Suite::Characterizations) {
        for d in cfg.d.iter() {
            let meta = Meta::new("characterizations", d, 0, seed).phi(phi.descriptor());
            out.push(task(format!("characterizations d={d}"), meta, move || run_all(ex, phi, d, trials, seed)));
        }
    }
    // everything below needs Φ in the entropy class
    if !phi.in_class() {
        return out;
    }
    if wants(Suite::EfronStein) {
        for d in cfg.d.iter() {
            out.push(one("efron-stein", d, n, cfg, move || s::efron_stein(ex, d, n, trials, seed)));
            out.push(one("efron-stein-forms", d, n, cfg, move || s::efron_stein_form_equivalence(ex, d, n, trials, seed)));
            out.push(one("plus-identities", d, 0, cfg, move || s::plus_identities(ex, d, trials, seed)));
            out.push(one("subadditivity", d, n, cfg, move || s::subadditivity(ex, phi, d, n, trials, seed)));
            out.push(one("law-total-variance", d, 0, cfg, move || s::law_total_variance(ex, phi, d, trials, seed)));
            out.push(one("duality", d, 0, cfg, move || s::duality(ex, phi, d, trials, seed)));
        }
    }
    if wants(Suite::Poincare) {
        for d in cfg.d.iter() {
            out.push(one("poincare", d, n, cfg, move || s::poincare(ex, d, n, trials, seed)));
            out.push(one("poincare-commuting", d, n, cfg, move || s::poincare_commuting(ex, d, n, trials, seed)));
        }
    }
    if wants(Suite::Gaussian) {
        out.push(one("gaussian-poincare", 1, n.max(1), cfg, move || s::gaussian_poincare(ex, n, samples, seed)));
        for d in cfg.d.iter() {
            out.push(one("gaussian-sobolev", d, 1, cfg, move || s::gaussian_sobolev(ex, d, samples, seed)));
            out.push(one("gaussian-logsobolev", d, 1, cfg, move || s::gaussian_logsobolev(ex, d, samples, seed)));
        }
    }
    if wants(Suite::Fourier) {
        for d in cfg.d.iter() {
            out.push(one("parseval", d, n, cfg, move || s::parseval(ex, d, n, trials, seed)));
            out.push(one("dirichlet", d, n, cfg, move || s::dirichlet(ex, d, n, trials, seed)));
            out.push(one("bonami-beckner", d, n, cfg, move || s::bonami_beckner(ex, d, n, trials, seed)));
            out.push(one("p-variance-limit", d, 0, cfg, move || s::p_variance(ex, d, trials, seed)));
        }
    }
    if wants(Suite::Sobolev) {
        for d in cfg.d.iter() {
            out.push(one("phi-sobolev", d, n, cfg, move || s::phi_sobolev(ex, d, n, trials, seed)));
            out.push(one("log-sobolev", d, n, cfg, move || s::log_sobolev(ex, d, n, trials, seed)));
        }
    }
    if wants(Suite::Holevo) {
        let eta_trials = trials.min(ETA_TRIALS);
        out.push(one("holevo-reference", 2, 2, cfg, move || s::holevo_reference(seed)));
        out.push(one("eta-classical", 1, 2, cfg, move || s::eta_classical(ex, eta_trials, seed)));
        for d in cfg.d.iter() {
            out.push(one("eta-reference", d, 2, cfg, move || s::eta_reference(ex, d, seed)));
            out.push(one("eta-range", d, 0, cfg, move || s::eta_range(ex, d, eta_trials, seed)));
            out.push(one("data-processing", d, 0, cfg, move || s::data_processing(ex, d, trials, seed)));
            out.push(one("functional-sdpi", d, 2, cfg, move || s::functional_sdpi(ex, d, trials, seed)));
        }
    }
    if wants(Suite::Frechet) {
        for d in cfg.d.iter() {
            out.push(one("frechet-first", d, 0, cfg, move || s::frechet_first(ex, d, trials, seed)));
            out.push(one("frechet-second", d, 0, cfg, move || s::frechet_second_order(ex, d, trials, seed)));
        }
    }
    out
}

/// Applies the `--tol` slack to a failed report.
fn relax(mut r: CheckReport, tol: Option<f64>) -> CheckReport {
    if let Some(t) = tol {
        if !r.pass && r.violation_count > 0 && r.max_gap <= t {
            r.pass = true;
            r.notes.push(format!("violations within the --tol slack {t:e}"));
        }
    }
    r
}

fn sort_key(r: &CheckReportJson) -> (String, usize, usize, String) {
    (r.check.clone(), r.d, r.n, r.phi.clone().unwrap_or_default())
}

/// Runs `suite` under `cfg`. Checks that error out are recorded as failing
/// reports carrying the error message, so one bad check does not hide the
/// others.
pub fn run_suite(cfg: &RunConfig, suite: Suite) -> Result<SuiteReport> {
    cfg.validate(suite)?;
    let start = Instant::now();
    let mut reports = Vec::new();
    let mut timings = Vec::new();
    let mut notes = Vec::new();
    if !cfg.phi.in_class() && suite == Suite::All {
        notes.push(format!("phi {} is outside the entropy class: only the characterizations ran", cfg.phi.descriptor()));
    }
    with_jobs(cfg.jobs, || {
        for t in tasks(suite, cfg) {
            let t0 = Instant::now();
            match (t.job)() {
                Ok(rs) => reports.extend(rs.into_iter().map(|r| relax(r, cfg.tol))),
                Err(e) => {
                    let mut r = CheckReport::new(t.meta);
                    r.pass = false;
                    r.notes.push(format!("error: {e}"));
                    reports.push(r);
                }
            }
            timings.push(Timing { task: t.label, millis: t0.elapsed().as_secs_f64() * 1e3 });
        }
    });
    let mut reports: Vec<CheckReportJson> = reports.iter().map(Into::into).collect();
    reports.sort_by_key(sort_key);
    let pass = reports.iter().all(|r| r.pass);
    Ok(SuiteReport {
        version: VERSION.into(),
        suite,
        config: cfg.echo(),
        reports,
        pass,
        notes,
        runtime: Runtime { jobs: cfg.jobs, total_millis: start.elapsed().as_secs_f64() * 1e3, timings },
    })
}
