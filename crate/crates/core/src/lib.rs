#![no_std]
//! Matrix Φ-entropies, matrix concentration inequalities and numerical
//! checkers for them.
//!
//! Everything here is `no_std` + `alloc`; parallel execution is injected
//! through [`exec::Executor`].

// `!(x <= tol)` is deliberate throughout: NaN must count as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod boolean;
pub mod characterizations;
pub mod concentration;
pub mod entropy;
pub mod error;
pub mod exec;
pub mod frechet;
pub mod holevo;
pub mod instances;
pub mod linalg;
pub mod phi;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod suites;
pub mod tol;

pub use error::{Error, Result};
pub use linalg::{HermitianMatrix, SpectralInterval, C64};
pub use phi::PhiFunction;
