//! Command-line harness for `matphi-core`: run configuration, suites,
//! instance generation, searches, file formats and a rayon executor.

pub mod analyze;
pub mod config;
pub mod error;
pub mod exec;
pub mod formats;
pub mod generate;
pub mod search;
pub mod suite;

pub use config::{DimRange, Format, RunConfig, Suite};
pub use error::{Error, Result};
pub use exec::Rayon;
pub use generate::{generate_instance, GenerateParams, InstanceKind};
pub use suite::{run_suite, SuiteReport};
