//! Seeded random instances shared by the checkers and the generators.

use alloc::vec::Vec;

use rand::Rng;

use crate::entropy::{DiscreteRandomMatrix, JointLaw, ProductModel};
use crate::error::Result;
use crate::linalg::HermitianMatrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Values {
    Psd,
    Hermitian,
    /// Spectrum in `[0, 1]`.
    UnitInterval,
}

pub fn matrix<R: Rng + ?Sized>(r: &mut R, d: usize, kind: Values) -> HermitianMatrix {
    match kind {
        Values::Psd => rng::psd(r, d),
        Values::Hermitian => rng::hermitian(r, d),
        Values::UnitInterval => rng::unit_interval(r, d),
    }
}

/// Law on `k` points with masses bounded below.
pub fn law<R: Rng + ?Sized>(r: &mut R, k: usize) -> Vec<f64> {
    rng::simplex(r, k, 0.05)
}

/// `n` independent inputs with `k` outcomes each and an arbitrary
/// (tabulated) output map.
pub fn product_model<R: Rng + ?Sized>(r: &mut R, d: usize, n: usize, k: usize, kind: Values) -> Result<ProductModel> {
    let laws: Vec<Vec<f64>> = (0..n).map(|_| law(r, k)).collect();
    let size = k.pow(n as u32);
    let values: Vec<HermitianMatrix> = (0..size).map(|_| matrix(r, d, kind)).collect();
    ProductModel::from_fn(laws, |x| {
        let idx = x.iter().rev().fold(0, |acc, &l| acc * k + l);
        values[idx].clone()
    })
}

pub fn random_matrix<R: Rng + ?Sized>(r: &mut R, d: usize, k: usize, kind: Values) -> Result<DiscreteRandomMatrix> {
    let p = law(r, k);
    DiscreteRandomMatrix::hermitian(p.into_iter().map(|p| (p, matrix(r, d, kind))).collect())
}

/// Two PSD random matrices on a shared index.
pub fn coupled_pair<R: Rng + ?Sized>(r: &mut R, d: usize, k: usize) -> Result<(DiscreteRandomMatrix, DiscreteRandomMatrix)> {
    let p = law(r, k);
    let a = DiscreteRandomMatrix::hermitian(p.iter().map(|&p| (p, rng::psd(r, d))).collect())?;
    let b = DiscreteRandomMatrix::hermitian(p.iter().map(|&p| (p, rng::psd(r, d))).collect())?;
    Ok((a, b))
}

pub fn joint_law<R: Rng + ?Sized>(r: &mut R, d: usize, entries: usize, labels: usize) -> Result<JointLaw> {
    let p = law(r, entries);
    JointLaw::new(p.into_iter().enumerate().map(|(k, p)| (p, if k < labels { k } else { r.random_range(0..labels) }, rng::psd(r, d))).collect())
}
