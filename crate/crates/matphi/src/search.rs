//! The two searches: log-Sobolev counterexamples and η lower bounds.

use matphi_core::boolean::search_lsi_counterexample;
use matphi_core::holevo::{eta_phi, EtaOptions};
use serde::Serialize;

use crate::error::Result;
use crate::exec::{with_jobs, Rayon};
use crate::formats::{BooleanFunctionFile, EtaInput, MatrixJson};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsiParams {
    pub d: usize,
    pub n: usize,
    pub restarts: u64,
    pub steps: usize,
    pub seed: u64,
    pub jobs: usize,
}

/// Result file of the log-Sobolev search; `function` is the best table
/// found (a witness when `found`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LsiSummary {
    pub found: bool,
    pub d: usize,
    pub n: usize,
    pub restarts: u64,
    pub steps: usize,
    pub seed: u64,
    /// `Ent(f²) − 2E(f)` at `tr E f² = 1`.
    pub objective: f64,
    pub entropy: f64,
    pub energy: f64,
    pub restart: u64,
    pub function: BooleanFunctionFile,
}

impl LsiSummary {
    pub fn line(&self) -> String {
        if self.found {
            format!(
                "found: Ent(f^2) - 2E(f) = {:.6e} at d={}, n={} (restart {})",
                self.objective, self.d, self.n, self.restart
            )
        } else {
            format!("not found: max Ent(f^2) - 2E(f) = {:.6e} at d={}, n={} over {} restarts", self.objective, self.d, self.n, self.restarts)
        }
    }
}

pub fn lsi_counterexample(p: LsiParams) -> Result<LsiSummary> {
    let s = with_jobs(p.jobs, || search_lsi_counterexample(&Rayon, p.d, p.n, p.restarts, p.steps, p.seed))?;
    Ok(LsiSummary {
        found: s.found,
        d: p.d,
        n: p.n,
        restarts: p.restarts,
        steps: p.steps,
        seed: p.seed,
        objective: s.objective,
        entropy: s.ent,
        energy: s.energy,
        restart: s.restart,
        function: BooleanFunctionFile::from_function(&s.f),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaSummary {
    pub eta_hat: f64,
    pub method: String,
    pub evaluations: u64,
    pub d: usize,
    pub mu: Vec<f64>,
    /// Input law `ν` of the best candidate.
    pub nu: Vec<f64>,
    /// The maximizing states (at `d = 1`, the scalars `f = ν/μ`).
    pub states: Vec<MatrixJson>,
}

impl EtaSummary {
    pub fn line(&self) -> String {
        format!("eta_hat = {:.12} ({}, {} evaluations, d={})", self.eta_hat, self.method, self.evaluations, self.d)
    }
}

pub fn eta(input: &EtaInput, opts: EtaOptions, jobs: usize) -> Result<EtaSummary> {
    let k = input.kernel.to_kernel()?;
    let r = with_jobs(jobs, || eta_phi(&Rayon, &input.mu, &k, &opts))?;
    Ok(EtaSummary {
        eta_hat: r.eta_hat,
        method: r.method.name().into(),
        evaluations: r.evaluations,
        d: opts.d,
        mu: input.mu.clone(),
        nu: r.nu,
        states: r.states.iter().map(Into::into).collect(),
    })
}
