//! Check outcomes and their aggregation.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::exec::Executor;
use crate::linalg::HermitianMatrix;
use crate::rng::{keyed, CheckRng};

/// Witnesses kept per report; further violations are only counted.
pub const MAX_WITNESSES: usize = 8;

/// One evaluated instance of a claim `lhs ≤ rhs` (identities are encoded
/// as `deviation ≤ 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub witness: Vec<(String, HermitianMatrix)>,
}

impl Outcome {
    pub fn new(lhs: f64, rhs: f64, tol: f64) -> Self {
        Self { lhs, rhs, tol, witness: Vec::new() }
    }

    /// `deviation ≤ tol`
    pub fn identity(deviation: f64, tol: f64) -> Self {
        Self::new(deviation, 0.0, tol)
    }

    pub fn with_witness(mut self, name: &str, m: &HermitianMatrix) -> Self {
        self.witness.push((name.into(), m.clone()));
        self
    }

    pub fn gap(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn violated(&self) -> bool {
        !(self.gap() <= self.tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub trial: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub witness: Vec<(String, HermitianMatrix)>,
}

/// Descriptive fields shared by all reports.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Meta {
    pub check: String,
    pub phi: Option<String>,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
}

impl Meta {
    pub fn new(check: &str, d: usize, n: usize, seed: u64) -> Self {
        Self { check: check.into(), phi: None, d, n, seed }
    }

    pub fn phi(mut self, descriptor: String) -> Self {
        self.phi = Some(descriptor);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub check: String,
    pub phi: Option<String>,
    pub d: usize,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub violations: Vec<Violation>,
    pub violation_count: u64,
    /// Largest `lhs − rhs` seen (negative when every instance had slack).
    pub max_gap: f64,
    /// The instance attaining `max_gap`.
    pub worst_lhs: f64,
    pub worst_rhs: f64,
    pub pass: bool,
    /// Monte Carlo sample count, for statistical checks.
    pub samples: Option<u64>,
    pub stderr: Option<f64>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(meta: Meta) -> Self {
        Self {
            check: meta.check,
            phi: meta.phi,
            d: meta.d,
            n: meta.n,
            trials: 0,
            seed: meta.seed,
            violations: Vec::new(),
            violation_count: 0,
            max_gap: f64::NEG_INFINITY,
            worst_lhs: 0.0,
            worst_rhs: 0.0,
            pass: true,
            samples: None,
            stderr: None,
            notes: Vec::new(),
        }
    }

    pub fn absorb(&mut self, trial: u64, o: Outcome) {
        self.trials += 1;
        let gap = o.gap();
        if gap > self.max_gap || gap.is_nan() {
            self.max_gap = gap;
            self.worst_lhs = o.lhs;
            self.worst_rhs = o.rhs;
        }
        if o.violated() {
            self.pass = false;
            self.violation_count += 1;
            if self.violations.len() < MAX_WITNESSES {
                self.violations.push(Violation { trial, lhs: o.lhs, rhs: o.rhs, gap, witness: o.witness });
            }
        }
    }

    pub fn single(meta: Meta, o: Outcome) -> Self {
        let mut r = Self::new(meta);
        r.absorb(0, o);
        r
    }

    pub fn note(mut self, s: &str) -> Self {
        self.notes.push(s.into());
        self
    }

    /// For sampling falsifiers: the claim "no violation in N trials".
    pub fn summary(&self) -> String {
        if self.pass {
            alloc::format!("{}: no violation in {} trials (max gap {:.3e})", self.check, self.trials, self.max_gap)
        } else {
            alloc::format!("{}: {} violations in {} trials (max gap {:.3e})", self.check, self.violation_count, self.trials, self.max_gap)
        }
    }
}

/// Runs `trials` seeded instances of a check and aggregates them in trial
/// order. Trial `t` receives `keyed(seed, check, t)`.
pub fn sweep<E, F>(exec: &E, meta: Meta, trials: u64, f: F) -> Result<CheckReport>
where
    E: Executor,
    F: Fn(u64, &mut CheckRng) -> Result<Outcome> + Sync + Send,
{
    let seed = meta.seed;
    let name = meta.check.clone();
    let results = exec.map(trials as usize, |t| {
        let mut rng = keyed(seed, &name, t as u64);
        f(t as u64, &mut rng)
    });
    let mut report = CheckReport::new(meta);
    for (t, r) in results.into_iter().enumerate() {
        report.absorb(t as u64, r?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use rand::Rng;

    #[test]
    fn aggregation() {
        let r = sweep(&Serial, Meta::new("toy", 1, 0, 3), 20, |t, rng| {
            let x: f64 = rng.random();
            Ok(Outcome::new(if t == 7 { 2.0 } else { x }, 1.0, 1e-9))
        })
        .unwrap();
        assert_eq!(r.trials, 20);
        assert_eq!(r.violation_count, 1);
        assert_eq!(r.violations[0].trial, 7);
        assert!(!r.pass);
        assert!((r.max_gap - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nan_is_a_violation() {
        let mut r = CheckReport::new(Meta::new("nan", 1, 0, 0));
        r.absorb(0, Outcome::new(f64::NAN, 0.0, 1.0));
        assert!(!r.pass);
    }
}
