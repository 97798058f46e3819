//! Deterministic instance generators writing the shared file formats.

use std::fmt;
use std::str::FromStr;

use matphi_core::boolean::random_psd_function;
use matphi_core::holevo::{random_ensemble, random_kernel};
use matphi_core::instances::{self, Values};
use matphi_core::rng::{self, keyed};

use crate::error::{config, Error, Result};
use crate::formats::{to_json, BooleanFunctionFile, EnsembleFile, KernelFile, MatrixJson, ProductModelFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    Hermitian,
    Psd,
    Ensemble,
    Kernel,
    BooleanFunction,
    ProductModel,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 6] = [
        InstanceKind::Hermitian,
        InstanceKind::Psd,
        InstanceKind::Ensemble,
        InstanceKind::Kernel,
        InstanceKind::BooleanFunction,
        InstanceKind::ProductModel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstanceKind::Hermitian => "hermitian",
            InstanceKind::Psd => "psd",
            InstanceKind::Ensemble => "ensemble",
            InstanceKind::Kernel => "kernel",
            InstanceKind::BooleanFunction => "boolean-function",
            InstanceKind::ProductModel => "product-model",
        }
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::Config(format!("unknown instance kind {s:?}")))
    }
}

/// Size parameters; which ones matter depends on the kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateParams {
    /// Matrix dimension.
    pub d: usize,
    /// Ensemble size, kernel inputs, or number of Boolean / product inputs.
    pub n: usize,
    /// Kernel outputs.
    pub m: usize,
}

/// JSON text for a seeded instance; identical arguments give identical bytes.
pub fn generate_instance(kind: InstanceKind, p: GenerateParams, seed: u64) -> Result<String> {
    if p.d == 0 {
        return config("d must be at least 1");
    }
    let mut r = keyed(seed, &format!("generate:{kind}"), 0);
    match kind {
        InstanceKind::Hermitian => to_json(&MatrixJson::from(&rng::hermitian(&mut r, p.d))),
        InstanceKind::Psd => to_json(&MatrixJson::from(&rng::psd(&mut r, p.d))),
        InstanceKind::Ensemble => {
            if p.n == 0 {
                return config("an ensemble needs n >= 1 states");
            }
            to_json(&EnsembleFile::from_ensemble(&random_ensemble(&mut r, p.n, p.d)))
        }
        InstanceKind::Kernel => {
            if p.n == 0 || p.m == 0 {
                return config("a kernel needs at least one input and one output");
            }
            to_json(&KernelFile::from(&random_kernel(&mut r, p.n, p.m)))
        }
        InstanceKind::BooleanFunction => {
            if p.n > matphi_core::boolean::MAX_N {
                return config(format!("n above {} is not supported", matphi_core::boolean::MAX_N));
            }
            to_json(&BooleanFunctionFile::from_function(&random_psd_function(&mut r, p.n, p.d)))
        }
        InstanceKind::ProductModel => {
            if p.n > crate::config::MAX_SUITE_N {
                return config(format!("n above {} is not supported", crate::config::MAX_SUITE_N));
            }
            let model = instances::product_model(&mut r, p.d, p.n, 2, Values::Hermitian)?;
            to_json(&ProductModelFile::from_model(&model))
        }
    }
}
