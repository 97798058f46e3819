//! Keyed deterministic randomness and matrix samplers.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{HermitianMatrix, C64};

pub type CheckRng = ChaCha8Rng;

/// 64-bit FNV-1a.
pub fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Generator for trial `trial` of check `check` under `seed`: the key is
/// (seed, hash(check)), the ChaCha stream is the trial index, so any
/// trial can be replayed in isolation.
pub fn keyed(seed: u64, check: &str, trial: u64) -> CheckRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a(check).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

pub fn rademacher<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Complex Ginibre matrix with `E|g_ij|² = 1`.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| C64::new(s * normal(rng), s * normal(rng)))
}

/// `(G + G†)/2` for Ginibre `G`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianMatrix {
    HermitianMatrix::from_matrix_unchecked(ginibre(rng, d, d))
}

/// Real Gaussian diagonal entries; for checks that need commuting inputs.
pub fn diagonal<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianMatrix {
    let v: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
    HermitianMatrix::from_real_diagonal(&v)
}

pub const PSD_FLOOR: f64 = 1e-3;
pub const PSD_MAX_NORM: f64 = 10.0;

/// `c·G†G + εI`, `ε = 1e-3`, with `c ≤ 1` chosen so that `‖·‖₂ ≤ 10`.
pub fn psd<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianMatrix {
    let g = ginibre(rng, d, d);
    let core = HermitianMatrix::from_matrix_unchecked(g.adjoint() * g);
    let eps = HermitianMatrix::scaled_identity(d, PSD_FLOOR);
    let room = PSD_MAX_NORM - PSD_FLOOR * libm::sqrt(d as f64);
    let n = core.frobenius_norm();
    let c = if n > room { room / n } else { 1.0 };
    &core.scale(c) + &eps
}

/// Haar-random unitary (QR of Ginibre with phase correction).
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<C64> {
    let qr = ginibre(rng, d, d).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let p = r[(j, j)];
        let ph = if p.norm() > 0.0 { p / p.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// `U diag(u) U†` with `u` uniform on `[0,1]`: a matrix in `[0, I]`.
pub fn unit_interval<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianMatrix {
    let u = unitary(rng, d);
    let v: Vec<f64> = (0..d).map(|_| uniform(rng)).collect();
    HermitianMatrix::from_real_diagonal(&v).congruence(&u)
}

/// `GG†/Tr(GG†)`.
pub fn density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianMatrix {
    let g = ginibre(rng, d, d);
    let m = HermitianMatrix::from_matrix_unchecked(&g * g.adjoint());
    let t = m.trace();
    m.scale(1.0 / t)
}

pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianMatrix {
    let v: DVector<C64> = ginibre(rng, d, 1).column(0).into_owned();
    HermitianMatrix::projector(&v)
}

/// Point on the probability simplex (normalized exponentials), bounded away
/// from zero by `floor`.
pub fn simplex<R: Rng + ?Sized>(rng: &mut R, k: usize, floor: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k).map(|_| -libm::log(1.0 - uniform(rng)) + floor).collect();
    let s: f64 = w.iter().sum();
    for x in &mut w {
        *x /= s;
    }
    w
}
