//! One-off analyses of user-supplied instance files.

use matphi_core::boolean::{
    check_bonami_beckner, check_log_sobolev, check_phi_sobolev, dirichlet_energy, fourier_transform, parseval_check,
};
use matphi_core::concentration::variance;
use matphi_core::entropy::phi_entropy;
use matphi_core::holevo::{check_data_processing, evolve_ensemble, holevo_chi};
use matphi_core::PhiFunction;
use serde::Serialize;

use crate::error::{config, Result};
use crate::formats::{bitstring, BooleanFunctionFile, CheckReportJson, EnsembleFile, MatrixJson, RandomMatrixFile};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyAnalysis {
    pub phi: String,
    pub d: usize,
    pub entropy: f64,
    pub variance: f64,
    pub mean: MatrixJson,
}

pub fn entropy(file: &RandomMatrixFile, phi: &PhiFunction) -> Result<EntropyAnalysis> {
    if !phi.in_class() {
        return config(format!("phi {} is outside the entropy class", phi.descriptor()));
    }
    let z = file.to_random_matrix()?;
    Ok(EntropyAnalysis {
        phi: phi.descriptor(),
        d: z.dim(),
        entropy: phi_entropy(phi, &z)?,
        variance: variance(&z),
        mean: (&z.mean()).into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub s: String,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierAnalysis {
    pub n: usize,
    pub d: usize,
    pub coefficients: Vec<Coefficient>,
    pub dirichlet_energy: f64,
    pub reports: Vec<CheckReportJson>,
    pub pass: bool,
}

/// Fourier table, Dirichlet energy, the exact identities, Bonami–Beckner at
/// `p = 3/2` and, for PSD tables, the Sobolev-type inequalities.
pub fn fourier(file: &BooleanFunctionFile, seed: u64) -> Result<FourierAnalysis> {
    let f = file.to_function()?;
    let t = fourier_transform(&f);
    let coefficients = t.coeffs().iter().enumerate().map(|(s, c)| Coefficient { s: bitstring(s, f.n()), matrix: c.into() }).collect();
    let mut reports = vec![parseval_check(&f, seed), matphi_core::boolean::dirichlet_check(&f, seed)?, check_bonami_beckner(&f, 1.5, seed)?];
    if f.is_psd() {
        reports.push(check_log_sobolev(&f, seed)?);
        reports.push(check_phi_sobolev(&f, 1.5, seed)?);
    }
    let reports: Vec<CheckReportJson> = reports.iter().map(Into::into).collect();
    Ok(FourierAnalysis {
        n: f.n(),
        d: f.d(),
        coefficients,
        dirichlet_energy: dirichlet_energy(&f)?,
        pass: reports.iter().all(|r| r.pass),
        reports,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolevoAnalysis {
    pub d: usize,
    pub size: usize,
    pub chi: f64,
    /// `χ` after the kernel, when the file has one.
    pub evolved_chi: Option<f64>,
    pub reports: Vec<CheckReportJson>,
    pub pass: bool,
}

pub fn holevo(file: &EnsembleFile, seed: u64) -> Result<HolevoAnalysis> {
    let ens = file.to_ensemble()?;
    let chi = holevo_chi(&ens)?;
    let mut evolved_chi = None;
    let mut reports = Vec::new();
    if let Some(k) = &file.kernel {
        let k = k.to_kernel()?;
        evolved_chi = Some(holevo_chi(&evolve_ensemble(&ens, &k)?)?);
        reports.push(CheckReportJson::from(&check_data_processing(&ens, &k, seed)?));
    }
    Ok(HolevoAnalysis { d: ens.dim(), size: ens.len(), chi, evolved_chi, pass: reports.iter().all(|r| r.pass), reports })
}
