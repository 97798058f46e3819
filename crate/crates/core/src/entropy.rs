//! Matrix Φ-entropy of finitely supported random matrices and product models.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frechet::{frechet_derivative, frechet_second};
use crate::linalg::HermitianMatrix;
use crate::phi::PhiFunction;
use crate::report::{CheckReport, Meta, Outcome};
use crate::scalar::ScalarFunction;
use crate::tol;

pub(crate) fn check_probabilities(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty support".into()));
    }
    if p.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidDistribution(format!("negative or NaN probability in {p:?}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {s}")));
    }
    Ok(())
}

/// Finitely supported random Hermitian matrix `{(p_k, Z_k)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRandomMatrix {
    support: Vec<(f64, HermitianMatrix)>,
}

impl DiscreteRandomMatrix {
    /// Law of a PSD random matrix.
    pub fn new(support: Vec<(f64, HermitianMatrix)>) -> Result<Self> {
        let z = Self::hermitian(support)?;
        for (_, v) in &z.support {
            let m = v.min_eigenvalue();
            if m < -tol::spec(v.dim()) {
                return Err(Error::NotPositiveSemidefinite { min_eigenvalue: m });
            }
        }
        Ok(z)
    }

    /// Law of a Hermitian (not necessarily PSD) random matrix.
    pub fn hermitian(support: Vec<(f64, HermitianMatrix)>) -> Result<Self> {
        let p: Vec<f64> = support.iter().map(|(p, _)| *p).collect();
        check_probabilities(&p)?;
        let d = support[0].1.dim();
        for (_, v) in &support {
            if v.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.dim() });
            }
        }
        Ok(Self { support })
    }

    pub fn constant(z: HermitianMatrix) -> Self {
        Self { support: vec![(1.0, z)] }
    }

    /// Uniform law on `values`.
    pub fn uniform(values: Vec<HermitianMatrix>) -> Result<Self> {
        let p = 1.0 / values.len() as f64;
        Self::hermitian(values.into_iter().map(|v| (p, v)).collect())
    }

    pub fn support(&self) -> &[(f64, HermitianMatrix)] {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.support[0].1.dim()
    }

    pub fn mean(&self) -> HermitianMatrix {
        let mut acc = HermitianMatrix::zeros(self.dim());
        for (p, v) in &self.support {
            acc = &acc + &v.scale(*p);
        }
        acc
    }

    /// `E g(Z)` for matrix-valued `g`.
    pub fn expect<G: Fn(&HermitianMatrix) -> Result<HermitianMatrix>>(&self, g: G) -> Result<HermitianMatrix> {
        let mut acc: Option<HermitianMatrix> = None;
        for (p, v) in &self.support {
            let gv = g(v)?.scale(*p);
            acc = Some(match acc {
                None => gv,
                Some(a) => &a + &gv,
            });
        }
        Ok(acc.unwrap())
    }

    /// Applies `g` pointwise, keeping the coupling.
    pub fn map<G: Fn(&HermitianMatrix) -> Result<HermitianMatrix>>(&self, g: G) -> Result<Self> {
        let support = self.support.iter().map(|(p, v)| Ok((*p, g(v)?))).collect::<Result<Vec<_>>>()?;
        Ok(Self { support })
    }

    /// `t·self + (1−t)·other` on a shared index.
    pub fn lerp(&self, other: &Self, t: f64) -> Result<Self> {
        self.check_coupled(other)?;
        Ok(Self { support: self.support.iter().zip(&other.support).map(|((p, a), (_, b))| (*p, a.lerp(b, t))).collect() })
    }

    pub fn check_coupled(&self, other: &Self) -> Result<()> {
        if self.support.len() != other.support.len() {
            return Err(Error::DimensionMismatch { expected: self.support.len(), found: other.support.len() });
        }
        for ((p, _), (q, _)) in self.support.iter().zip(&other.support) {
            if (p - q).abs() > 1e-15 {
                return Err(Error::InvalidDistribution("coupled laws must share probabilities".into()));
            }
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

/// `tr Φ(A)` (normalized trace).
pub fn trace_phi<F: ScalarFunction + ?Sized>(f: &F, a: &HermitianMatrix) -> Result<f64> {
    let lam = f.domain(0).admit(&a.eigenvalues(), tol::spec(a.dim()))?;
    Ok(lam.iter().map(|&x| f.value(x)).sum::<f64>() / a.dim() as f64)
}

/// `H_Φ(Z) = tr[E Φ(Z) − Φ(E Z)]`.
pub fn phi_entropy<F: ScalarFunction + ?Sized>(phi: &F, z: &DiscreteRandomMatrix) -> Result<f64> {
    if z.support.len() == 1 {
        return Ok(0.0);
    }
    let mut e = 0.0;
    for (p, v) in &z.support {
        e += p * trace_phi(phi, v)?;
    }
    Ok(e - trace_phi(phi, &z.mean())?)
}

/// Independent finite inputs `X_1..X_n` (labels `0..k_i`) and the fully
/// tabulated output `Z = L(X_1..X_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductModel {
    laws: Vec<Vec<f64>>,
    strides: Vec<usize>,
    table: Vec<HermitianMatrix>,
}

impl ProductModel {
    pub fn try_from_fn<F>(laws: Vec<Vec<f64>>, f: F) -> Result<Self>
    where
        F: Fn(&[usize]) -> Result<HermitianMatrix>,
    {
        let mut size: u128 = 1;
        let mut strides = Vec::with_capacity(laws.len());
        for law in &laws {
            check_probabilities(law)?;
            strides.push(size as usize);
            size *= law.len() as u128;
            if size > tol::MAX_ENUMERATION {
                return Err(Error::EnumerationTooLarge { size, limit: tol::MAX_ENUMERATION });
            }
        }
        let mut table = Vec::with_capacity(size as usize);
        let mut labels = vec![0usize; laws.len()];
        for idx in 0..size as usize {
            for (i, law) in laws.iter().enumerate() {
                labels[i] = (idx / strides[i]) % law.len();
            }
            table.push(f(&labels)?);
        }
        let d = table[0].dim();
        if let Some(bad) = table.iter().find(|m| m.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.dim() });
        }
        Ok(Self { laws, strides, table })
    }

    pub fn from_fn<F: Fn(&[usize]) -> HermitianMatrix>(laws: Vec<Vec<f64>>, f: F) -> Result<Self> {
        Self::try_from_fn(laws, |x| Ok(f(x)))
    }

    pub fn n(&self) -> usize {
        self.laws.len()
    }

    pub fn d(&self) -> usize {
        self.table[0].dim()
    }

    pub fn size(&self) -> usize {
        self.table.len()
    }

    pub fn laws(&self) -> &[Vec<f64>] {
        &self.laws
    }

    pub fn label(&self, idx: usize, i: usize) -> usize {
        (idx / self.strides[i]) % self.laws[i].len()
    }

    pub fn labels(&self, idx: usize) -> Vec<usize> {
        (0..self.n()).map(|i| self.label(idx, i)).collect()
    }

    pub fn prob(&self, idx: usize) -> f64 {
        (0..self.n()).map(|i| self.laws[i][self.label(idx, i)]).product()
    }

    /// Probability of the labels other than coordinate `i`.
    pub fn prob_without(&self, idx: usize, i: usize) -> f64 {
        (0..self.n()).filter(|&j| j != i).map(|j| self.laws[j][self.label(idx, j)]).product()
    }

    pub fn value(&self, idx: usize) -> &HermitianMatrix {
        &self.table[idx]
    }

    pub fn with_label(&self, idx: usize, i: usize, label: usize) -> usize {
        idx - self.label(idx, i) * self.strides[i] + label * self.strides[i]
    }

    /// Indices with label 0 at coordinate `i`: one per outcome of `X_{-i}`.
    pub fn slices(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size()).filter(move |&idx| self.label(idx, i) == 0)
    }

    /// Law of `Z` (zero-probability outcomes dropped).
    pub fn law(&self) -> DiscreteRandomMatrix {
        let support = (0..self.size()).map(|k| (self.prob(k), self.table[k].clone())).filter(|(p, _)| *p > 0.0).collect();
        DiscreteRandomMatrix { support }
    }

    /// Law of `Z` over coordinate `i` with the others frozen at `idx`.
    pub fn conditional_law(&self, idx: usize, i: usize) -> DiscreteRandomMatrix {
        let support = self.laws[i]
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(l, p)| (*p, self.table[self.with_label(idx, i, l)].clone()))
            .collect();
        DiscreteRandomMatrix { support }
    }

    /// `E_i Z` as a function of `idx` (constant along coordinate `i`).
    pub fn conditional_mean(&self, idx: usize, i: usize) -> HermitianMatrix {
        self.conditional_law(idx, i).mean()
    }
}

/// `(P(X_{-i}), H_Φ^{(i)}(Z))` for every outcome of `X_{-i}`.
pub fn conditional_phi_entropy<F: ScalarFunction + ?Sized>(phi: &F, model: &ProductModel, i: usize) -> Result<Vec<(f64, f64)>> {
    if i >= model.n() {
        return Err(Error::IndexOutOfRange { index: i, len: model.n() });
    }
    model.slices(i).map(|idx| Ok((model.prob_without(idx, i), phi_entropy(phi, &model.conditional_law(idx, i))?))).collect()
}

/// `Σ_i E H_Φ^{(i)}(Z)`
pub fn subadditivity_bound<F: ScalarFunction + ?Sized>(phi: &F, model: &ProductModel) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..model.n() {
        total += conditional_phi_entropy(phi, model, i)?.iter().map(|(p, h)| p * h).sum::<f64>();
    }
    Ok(total)
}

pub fn subadditivity_outcome<F: ScalarFunction + ?Sized>(phi: &F, model: &ProductModel) -> Result<Outcome> {
    let lhs = phi_entropy(phi, &model.law())?;
    let rhs = subadditivity_bound(phi, model)?;
    Ok(Outcome::new(lhs, rhs, tol::entropy(rhs.abs().max(lhs.abs()))))
}

pub fn check_subadditivity(phi: &PhiFunction, model: &ProductModel, seed: u64) -> Result<CheckReport> {
    let meta = Meta::new("subadditivity", model.d(), model.n(), seed).phi(phi.descriptor());
    Ok(CheckReport::single(meta, subadditivity_outcome(phi, model)?))
}

/// The three Brègman-type maps `A_Φ`, `B_Φ`, `C_Φ` (full trace).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bregman {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub fn bregman_a<F: ScalarFunction + ?Sized>(phi: &F, u: &HermitianMatrix, v: &HermitianMatrix) -> Result<f64> {
    let d = u.dim() as f64;
    let uv = u + v;
    Ok(d * (trace_phi(phi, &uv)? - trace_phi(phi, u)?) - frechet_derivative(phi, u, v)?.trace())
}

pub fn bregman_b<F: ScalarFunction + ?Sized>(phi: &F, u: &HermitianMatrix, v: &HermitianMatrix) -> Result<f64> {
    Ok(frechet_derivative(phi, &(u + v), v)?.trace() - frechet_derivative(phi, u, v)?.trace())
}

pub fn bregman_c<F: ScalarFunction + ?Sized>(phi: &F, u: &HermitianMatrix, v: &HermitianMatrix) -> Result<f64> {
    Ok(frechet_second(phi, u, v, v)?.trace())
}

pub fn bregman_maps<F: ScalarFunction + ?Sized>(phi: &F, u: &HermitianMatrix, v: &HermitianMatrix) -> Result<Bregman> {
    Ok(Bregman { a: bregman_a(phi, u, v)?, b: bregman_b(phi, u, v)?, c: bregman_c(phi, u, v)? })
}

/// `tr E[(Φ'(T) − Φ'(E T))(Z − T)] + H_Φ(T)`, a lower bound on `H_Φ(Z)`.
pub fn duality_lower_bound<F: ScalarFunction + ?Sized>(phi: &F, z: &DiscreteRandomMatrix, t: &DiscreteRandomMatrix) -> Result<f64> {
    z.check_coupled(t)?;
    let d = z.dim() as f64;
    let dom = phi.domain(1);
    let psi_mean = t.mean().apply(|x| phi.derivative(1, x), &dom)?;
    let mut acc = 0.0;
    for ((p, zk), (_, tk)) in z.support.iter().zip(&t.support) {
        let diff = &tk.apply(|x| phi.derivative(1, x), &dom)? - &psi_mean;
        acc += p * diff.inner(&(zk - tk)) / d;
    }
    Ok(acc + phi_entropy(phi, t)?)
}

/// Finite joint law of `(Z, Y)` with `Y` a label.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLaw {
    entries: Vec<(f64, usize, HermitianMatrix)>,
}

impl JointLaw {
    pub fn new(entries: Vec<(f64, usize, HermitianMatrix)>) -> Result<Self> {
        let p: Vec<f64> = entries.iter().map(|e| e.0).collect();
        check_probabilities(&p)?;
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(f64, usize, HermitianMatrix)] {
        &self.entries
    }

    pub fn z_law(&self) -> DiscreteRandomMatrix {
        DiscreteRandomMatrix { support: self.entries.iter().filter(|e| e.0 > 0.0).map(|e| (e.0, e.2.clone())).collect() }
    }

    /// `(P(Y = y), law of Z given Y = y)` over the labels that occur.
    pub fn conditionals(&self) -> Vec<(f64, DiscreteRandomMatrix)> {
        let mut labels: Vec<usize> = self.entries.iter().filter(|e| e.0 > 0.0).map(|e| e.1).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
            .into_iter()
            .map(|y| {
                let py: f64 = self.entries.iter().filter(|e| e.1 == y).map(|e| e.0).sum();
                let support = self.entries.iter().filter(|e| e.1 == y && e.0 > 0.0).map(|e| (e.0 / py, e.2.clone())).collect();
                (py, DiscreteRandomMatrix { support })
            })
            .collect()
    }
}

/// `(H_Φ(Z), E_Y H_Φ(Z|Y), H_Φ(E[Z|Y]))`.
pub fn total_variance_terms<F: ScalarFunction + ?Sized>(phi: &F, joint: &JointLaw) -> Result<(f64, f64, f64)> {
    let total = phi_entropy(phi, &joint.z_law())?;
    let conds = joint.conditionals();
    let mut within = 0.0;
    let mut means = Vec::with_capacity(conds.len());
    for (py, law) in &conds {
        within += py * phi_entropy(phi, law)?;
        means.push((*py, law.mean()));
    }
    let between = phi_entropy(phi, &DiscreteRandomMatrix { support: means })?;
    Ok((total, within, between))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn scalar(x: f64) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(&[x])
    }

    #[test]
    fn entropy_examples() {
        let c = DiscreteRandomMatrix::constant(HermitianMatrix::identity(2));
        assert_eq!(phi_entropy(&PhiFunction::xlogx(), &c).unwrap(), 0.0);
        let z = DiscreteRandomMatrix::uniform(vec![scalar(0.0), scalar(1.0)]).unwrap();
        assert!((phi_entropy(&PhiFunction::square(), &z).unwrap() - 0.25).abs() < 1e-15);
        let e = core::f64::consts::E;
        let z = DiscreteRandomMatrix::uniform(vec![scalar(1.0), scalar(e)]).unwrap();
        let m = (1.0 + e) / 2.0;
        let want = e / 2.0 - m * libm::log(m);
        assert!((phi_entropy(&PhiFunction::xlogx(), &z).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_laws() {
        assert!(DiscreteRandomMatrix::new(vec![(0.5, scalar(1.0)), (0.4, scalar(1.0))]).is_err());
        assert!(matches!(
            DiscreteRandomMatrix::new(vec![(1.0, scalar(-1.0))]),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn conditional_examples() {
        let rad = vec![0.5, 0.5];
        let m = ProductModel::from_fn(vec![rad.clone(), rad.clone()], |x| {
            let s = |l: usize| if l == 0 { -1.0 } else { 1.0 };
            scalar(s(x[0]) + s(x[1]) + 2.0)
        })
        .unwrap();
        let t = conditional_phi_entropy(&PhiFunction::square(), &m, 0).unwrap();
        assert_eq!(t.len(), 2);
        for (p, h) in t {
            assert!((p - 0.5).abs() < 1e-15 && (h - 1.0).abs() < 1e-12);
        }
        let only2 = ProductModel::from_fn(vec![rad.clone(), rad.clone()], |x| scalar(x[1] as f64 + 1.0)).unwrap();
        assert!(conditional_phi_entropy(&PhiFunction::xlogx(), &only2, 0).unwrap().iter().all(|(_, h)| *h == 0.0));
        let one = ProductModel::from_fn(vec![vec![0.3, 0.7]], |x| scalar(x[0] as f64 + 0.5)).unwrap();
        let t = conditional_phi_entropy(&PhiFunction::xlogx(), &one, 0).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t[0].1 - phi_entropy(&PhiFunction::xlogx(), &one.law()).unwrap()).abs() < 1e-15);
        assert!(matches!(conditional_phi_entropy(&PhiFunction::xlogx(), &one, 1), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn enumeration_guard() {
        let laws = vec![vec![0.5, 0.5]; 21];
        assert!(matches!(ProductModel::from_fn(laws, |_| scalar(0.0)), Err(Error::EnumerationTooLarge { .. })));
    }

    #[test]
    fn bregman_quadratic_and_zero() {
        let mut r = rng::keyed(0, "bregman-test", 0);
        let u = rng::psd(&mut r, 3);
        let v = rng::psd(&mut r, 3);
        let b = bregman_maps(&PhiFunction::square(), &u, &v).unwrap();
        let tv2 = v.square().trace();
        assert!((b.a - tv2).abs() < 1e-10 * tv2);
        assert!((b.b - 2.0 * tv2).abs() < 1e-10 * tv2);
        assert!((b.c - 2.0 * tv2).abs() < 1e-10 * tv2);
        let z = bregman_maps(&PhiFunction::xlogx(), &u, &HermitianMatrix::zeros(3)).unwrap();
        assert_eq!((z.a.abs() < 1e-12, z.b, z.c), (true, 0.0, 0.0));
    }

    #[test]
    fn duality_examples() {
        let mut r = rng::keyed(0, "duality-test", 0);
        let z = DiscreteRandomMatrix::new(vec![(0.25, rng::psd(&mut r, 2)), (0.75, rng::psd(&mut r, 2))]).unwrap();
        let phi = PhiFunction::xlogx();
        let h = phi_entropy(&phi, &z).unwrap();
        assert!((duality_lower_bound(&phi, &z, &z).unwrap() - h).abs() < 1e-12);
        let c = z.map(|_| Ok(z.mean())).unwrap();
        assert!(duality_lower_bound(&phi, &z, &c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn total_variance_identity() {
        let mut r = rng::keyed(0, "ltv-test", 0);
        let entries: Vec<_> = (0..6).map(|k| (1.0 / 6.0, k % 3, rng::psd(&mut r, 2))).collect();
        let j = JointLaw::new(entries).unwrap();
        let (t, w, b) = total_variance_terms(&PhiFunction::xlogx(), &j).unwrap();
        assert!((t - w - b).abs() < 1e-12);
    }
}
