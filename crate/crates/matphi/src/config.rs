use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use matphi_core::PhiFunction;
use serde::Serialize;

use crate::error::{config, Error, Result};

/// Seed fallback when `--seed` is absent.
pub const SEED_ENV: &str = "MATPHI_SEED";

/// Largest `n` accepted by the suites (product models enumerate `kⁿ` points).
pub const MAX_SUITE_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Characterizations,
    EfronStein,
    Poincare,
    Gaussian,
    Fourier,
    Sobolev,
    Holevo,
    Frechet,
    All,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Characterizations,
        Suite::EfronStein,
        Suite::Poincare,
        Suite::Gaussian,
        Suite::Fourier,
        Suite::Sobolev,
        Suite::Holevo,
        Suite::Frechet,
        Suite::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Characterizations => "characterizations",
            Suite::EfronStein => "efron-stein",
            Suite::Poincare => "poincare",
            Suite::Gaussian => "gaussian",
            Suite::Fourier => "fourier",
            Suite::Sobolev => "sobolev",
            Suite::Holevo => "holevo",
            Suite::Frechet => "frechet",
            Suite::All => "all",
        }
    }

    /// Suites that only exercise the characterizations; the only
    /// ones an out-of-class Φ may be run through.
    pub fn accepts_out_of_class(self) -> bool {
        matches!(self, Suite::Characterizations | Suite::All)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => config(format!("unknown format {s:?} (expected json or csv)")),
        }
    }
}

/// Inclusive range of dimensions, written `3` or `1..3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DimRange {
    pub lo: usize,
    pub hi: usize,
}

impl DimRange {
    pub fn single(d: usize) -> Self {
        Self { lo: d, hi: d }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }
}

impl FromStr for DimRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad dimension {t:?}")));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let d = parse(s)?;
                (d, d)
            }
        };
        if lo > hi {
            return config(format!("empty dimension range {s:?}"));
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Seeded instances per check.
    pub trials: u64,
    /// Monte Carlo samples for the Gaussian checks.
    pub samples: u64,
    /// Extra absolute slack: a failed report whose largest gap is within it
    /// is re-judged as passing (noted in the report).
    pub tol: Option<f64>,
    pub d: DimRange,
    /// Trial `t` uses `1 + t mod n` inputs.
    pub n: usize,
    pub phi: PhiFunction,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 100,
            samples: 20_000,
            tol: None,
            d: DimRange { lo: 1, hi: 2 },
            n: 3,
            phi: PhiFunction::xlogx(),
            jobs: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            out: None,
            format: Format::Json,
        }
    }
}

impl RunConfig {
    pub fn validate(&self, suite: Suite) -> Result<()> {
        if self.trials == 0 {
            return config("trials must be at least 1");
        }
        if self.samples < 2 {
            return config("samples must be at least 2");
        }
        if self.d.lo == 0 {
            return config("d must be at least 1");
        }
        if self.d.hi > 16 {
            return config("d above 16 is not supported");
        }
        if self.n > MAX_SUITE_N {
            return config(format!("n above {MAX_SUITE_N} is not supported"));
        }
        if self.jobs == 0 {
            return config("jobs must be at least 1");
        }
        if let Some(t) = self.tol {
            if !(t >= 0.0 && t.is_finite()) {
                return config(format!("tol must be a non-negative number, got {t}"));
            }
        }
        if !self.phi.in_class() && !suite.accepts_out_of_class() {
            return config(format!("phi {} is outside the entropy class; only the characterization suites accept it", self.phi.descriptor()));
        }
        Ok(())
    }

    /// The result-relevant part of the configuration (parallelism and the
    /// output location do not affect reports).
    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            seed: self.seed,
            trials: self.trials,
            samples: self.samples,
            tol: self.tol,
            d: self.d,
            n: self.n,
            phi: self.phi.descriptor(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub trials: u64,
    pub samples: u64,
    pub tol: Option<f64>,
    pub d: DimRange,
    pub n: usize,
    pub phi: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_names() {
        assert_eq!("3".parse::<DimRange>().unwrap(), DimRange::single(3));
        assert_eq!("1..3".parse::<DimRange>().unwrap(), DimRange { lo: 1, hi: 3 });
        assert_eq!("1..=3".parse::<DimRange>().unwrap(), DimRange { lo: 1, hi: 3 });
        assert!("3..1".parse::<DimRange>().is_err());
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn validation() {
        let c = RunConfig::default();
        assert!(c.validate(Suite::All).is_ok());
        assert!(RunConfig { trials: 0, ..c.clone() }.validate(Suite::All).is_err());
        assert!(RunConfig { d: DimRange::single(0), ..c.clone() }.validate(Suite::All).is_err());
        let cube = RunConfig { phi: PhiFunction::cube(), ..c };
        assert!(cube.validate(Suite::Characterizations).is_ok());
        assert!(cube.validate(Suite::All).is_ok());
        assert!(matches!(cube.validate(Suite::EfronStein), Err(Error::Config(_))));
    }
}
