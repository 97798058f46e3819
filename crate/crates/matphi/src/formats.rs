//! Shared JSON file formats and report serialization.
//!
//! Matrices are `{"re": [[..]], "im": [[..]]}` in row-major nested arrays;
//! `im` may be omitted for real matrices. Boolean points are bitstrings
//! whose `i`-th character is the coordinate `x_{i+1}`.

use std::fs;
use std::path::Path;

use matphi_core::boolean::MatrixBooleanFunction;
use matphi_core::entropy::{DiscreteRandomMatrix, ProductModel};
use matphi_core::holevo::{CQEnsemble, MarkovKernel};
use matphi_core::report::{CheckReport, Violation};
use matphi_core::HermitianMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl From<&HermitianMatrix> for MatrixJson {
    fn from(m: &HermitianMatrix) -> Self {
        let d = m.dim();
        let (re, im) = m.to_parts();
        Self { re: re.chunks(d.max(1)).map(<[f64]>::to_vec).collect(), im: im.chunks(d.max(1)).map(<[f64]>::to_vec).collect() }
    }
}

impl MatrixJson {
    pub fn dim(&self) -> usize {
        self.re.len()
    }

    pub fn to_hermitian(&self) -> Result<HermitianMatrix> {
        let d = self.re.len();
        if d == 0 {
            return Err(Error::Format("empty matrix".into()));
        }
        if self.re.iter().any(|r| r.len() != d) {
            return Err(Error::Format(format!("matrix rows must all have length {d}")));
        }
        let re: Vec<f64> = self.re.concat();
        let im: Vec<f64> = if self.im.is_empty() {
            vec![0.0; d * d]
        } else {
            if self.im.len() != d || self.im.iter().any(|r| r.len() != d) {
                return Err(Error::Format(format!("imaginary part must be {d}x{d}")));
            }
            self.im.concat()
        };
        Ok(HermitianMatrix::from_parts(d, &re, &im)?)
    }
}

fn same_dim(d: usize, m: &HermitianMatrix) -> Result<()> {
    if m.dim() != d {
        return Err(Error::Format(format!("expected {d}x{d} matrix, found {0}x{0}", m.dim())));
    }
    Ok(())
}

// ---- random matrices ---------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMatrix {
    pub p: f64,
    pub matrix: MatrixJson,
}

/// A finitely supported random matrix: `{"d", "support": [{"p", "matrix"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomMatrixFile {
    pub d: usize,
    pub support: Vec<WeightedMatrix>,
}

impl RandomMatrixFile {
    pub fn to_random_matrix(&self) -> Result<DiscreteRandomMatrix> {
        let mut support = Vec::with_capacity(self.support.len());
        for w in &self.support {
            let m = w.matrix.to_hermitian()?;
            same_dim(self.d, &m)?;
            support.push((w.p, m));
        }
        Ok(DiscreteRandomMatrix::hermitian(support)?)
    }
}

// ---- Boolean functions ------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointJson {
    pub x: String,
    pub matrix: MatrixJson,
}

/// `{"n", "d", "points": [{"x": "0110", "matrix"}]}`, all `2ⁿ` points present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BooleanFunctionFile {
    pub n: usize,
    pub d: usize,
    pub points: Vec<PointJson>,
}

/// Bit `i` of the result is character `i` of the string.
pub fn parse_bitstring(s: &str, n: usize) -> Result<usize> {
    if s.len() != n {
        return Err(Error::Format(format!("point {s:?} has {} coordinates, expected {n}", s.len())));
    }
    let mut x = 0usize;
    for (i, c) in s.chars().enumerate() {
        match c {
            '0' => {}
            '1' => x |= 1 << i,
            _ => return Err(Error::Format(format!("point {s:?} is not a bitstring"))),
        }
    }
    Ok(x)
}

pub fn bitstring(x: usize, n: usize) -> String {
    (0..n).map(|i| if x >> i & 1 == 1 { '1' } else { '0' }).collect()
}

impl BooleanFunctionFile {
    pub fn to_function(&self) -> Result<MatrixBooleanFunction> {
        if self.n > matphi_core::boolean::MAX_N {
            return Err(Error::Format(format!("n = {} exceeds {}", self.n, matphi_core::boolean::MAX_N)));
        }
        let size = 1usize << self.n;
        let mut table: Vec<Option<HermitianMatrix>> = vec![None; size];
        for p in &self.points {
            let x = parse_bitstring(&p.x, self.n)?;
            if table[x].is_some() {
                return Err(Error::Format(format!("point {:?} given twice", p.x)));
            }
            let m = p.matrix.to_hermitian()?;
            same_dim(self.d, &m)?;
            table[x] = Some(m);
        }
        let mut values = Vec::with_capacity(size);
        for (x, v) in table.into_iter().enumerate() {
            match v {
                Some(m) => values.push(m),
                None => return Err(Error::Format(format!("point {:?} is missing", bitstring(x, self.n)))),
            }
        }
        Ok(MatrixBooleanFunction::new(self.n, values)?)
    }

    pub fn from_function(f: &MatrixBooleanFunction) -> Self {
        let points = f.table().iter().enumerate().map(|(x, m)| PointJson { x: bitstring(x, f.n()), matrix: m.into() }).collect();
        Self { n: f.n(), d: f.d(), points }
    }
}

// ---- ensembles and kernels --------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFile {
    pub rows: Vec<Vec<f64>>,
}

impl KernelFile {
    pub fn to_kernel(&self) -> Result<MarkovKernel> {
        Ok(MarkovKernel::new(self.rows.clone())?)
    }
}

impl From<&MarkovKernel> for KernelFile {
    fn from(k: &MarkovKernel) -> Self {
        Self { rows: k.rows().to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleItem {
    pub p: f64,
    pub rho: MatrixJson,
}

/// `{"d", "items": [{"p", "rho"}]}`, optionally with a `"kernel"` to push
/// the ensemble through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub d: usize,
    pub items: Vec<EnsembleItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelFile>,
}

impl EnsembleFile {
    pub fn to_ensemble(&self) -> Result<CQEnsemble> {
        let mut mu = Vec::with_capacity(self.items.len());
        let mut states = Vec::with_capacity(self.items.len());
        for it in &self.items {
            let rho = it.rho.to_hermitian()?;
            same_dim(self.d, &rho)?;
            mu.push(it.p);
            states.push(rho);
        }
        Ok(CQEnsemble::new(mu, states)?)
    }

    pub fn from_ensemble(e: &CQEnsemble) -> Self {
        let items = e.mu().iter().zip(e.states()).map(|(&p, s)| EnsembleItem { p, rho: s.into() }).collect();
        Self { d: e.dim(), items, kernel: None }
    }
}

/// Input of the η search: `{"mu": [..], "kernel": {"rows": [[..]]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaInput {
    pub mu: Vec<f64>,
    pub kernel: KernelFile,
}

// ---- product models ---------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub labels: Vec<usize>,
    pub matrix: MatrixJson,
}

/// `{"d", "n", "laws": [[..]], "values": [{"labels", "matrix"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductModelFile {
    pub d: usize,
    pub n: usize,
    pub laws: Vec<Vec<f64>>,
    pub values: Vec<LabeledMatrix>,
}

impl ProductModelFile {
    pub fn from_model(m: &ProductModel) -> Self {
        let values = (0..m.size()).map(|idx| LabeledMatrix { labels: m.labels(idx), matrix: m.value(idx).into() }).collect();
        Self { d: m.d(), n: m.n(), laws: m.laws().to_vec(), values }
    }

    pub fn to_model(&self) -> Result<ProductModel> {
        if self.laws.len() != self.n {
            return Err(Error::Format(format!("{} laws for n = {}", self.laws.len(), self.n)));
        }
        let mut table = std::collections::BTreeMap::new();
        for v in &self.values {
            let m = v.matrix.to_hermitian()?;
            same_dim(self.d, &m)?;
            if table.insert(v.labels.clone(), m).is_some() {
                return Err(Error::Format(format!("labels {:?} given twice", v.labels)));
            }
        }
        let missing = std::cell::Cell::new(None);
        let model = ProductModel::from_fn(self.laws.clone(), |x| match table.get(x) {
            Some(m) => m.clone(),
            None => {
                missing.set(Some(x.to_vec()));
                HermitianMatrix::zeros(self.d)
            }
        })?;
        if let Some(x) = missing.take() {
            return Err(Error::Format(format!("labels {x:?} are missing")));
        }
        Ok(model)
    }
}

// ---- reports ----------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedMatrix {
    pub name: String,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationJson {
    pub trial: u64,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub gap: Option<f64>,
    pub witness: Vec<NamedMatrix>,
}

/// Serialized [`CheckReport`]; non-finite numbers become `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReportJson {
    pub check: String,
    pub phi: Option<String>,
    pub d: usize,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub pass: bool,
    pub violation_count: u64,
    pub max_gap: Option<f64>,
    pub worst_lhs: Option<f64>,
    pub worst_rhs: Option<f64>,
    pub samples: Option<u64>,
    pub stderr: Option<f64>,
    pub violations: Vec<ViolationJson>,
    pub notes: Vec<String>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl From<&Violation> for ViolationJson {
    fn from(v: &Violation) -> Self {
        Self {
            trial: v.trial,
            lhs: finite(v.lhs),
            rhs: finite(v.rhs),
            gap: finite(v.gap),
            witness: v.witness.iter().map(|(name, m)| NamedMatrix { name: name.clone(), matrix: m.into() }).collect(),
        }
    }
}

impl From<&CheckReport> for CheckReportJson {
    fn from(r: &CheckReport) -> Self {
        Self {
            check: r.check.clone(),
            phi: r.phi.clone(),
            d: r.d,
            n: r.n,
            trials: r.trials,
            seed: r.seed,
            pass: r.pass,
            violation_count: r.violation_count,
            max_gap: finite(r.max_gap),
            worst_lhs: finite(r.worst_lhs),
            worst_rhs: finite(r.worst_rhs),
            samples: r.samples,
            stderr: r.stderr.and_then(finite),
            violations: r.violations.iter().map(Into::into).collect(),
            notes: r.notes.clone(),
        }
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    check: &'a str,
    phi: &'a str,
    d: usize,
    n: usize,
    trials: u64,
    max_gap: String,
    pass: bool,
    seed: u64,
}

/// One row per report: `check,phi,d,n,trials,max_gap,pass,seed`.
pub fn reports_csv<'a>(reports: impl IntoIterator<Item = &'a CheckReportJson>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(CsvRow {
            check: &r.check,
            phi: r.phi.as_deref().unwrap_or(""),
            d: r.d,
            n: r.n,
            trials: r.trials,
            max_gap: r.max_gap.map(|g| format!("{g:e}")).unwrap_or_default(),
            pass: r.pass,
            seed: r.seed,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

// ---- file helpers -----------------------------------------------------------

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|source| Error::Io { path: p.into(), source }),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}
