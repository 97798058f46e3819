//! Dense Hermitian matrices, spectral calculus, norms and the Löwner order.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex<f64>;

/// A closed/open interval of the real line housing a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl SpectralInterval {
    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidArgument(alloc::format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi, lo_open: false, hi_open: false })
    }

    pub const fn real_line() -> Self {
        Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY, lo_open: true, hi_open: true }
    }

    /// `[0, ∞)`
    pub const fn nonnegative() -> Self {
        Self { lo: 0.0, hi: f64::INFINITY, lo_open: false, hi_open: true }
    }

    /// `(0, ∞)`
    pub const fn positive() -> Self {
        Self { lo: 0.0, hi: f64::INFINITY, lo_open: true, hi_open: true }
    }

    pub const fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0, lo_open: false, hi_open: false }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below
    }

    /// Validates `values`, snapping points within `slack` outside a closed
    /// endpoint onto that endpoint.
    pub fn admit(&self, values: &[f64], slack: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(values.len());
        let mut bad = Vec::new();
        for &x in values {
            if self.contains(x) {
                out.push(x);
            } else if !self.lo_open && x < self.lo && x >= self.lo - slack {
                out.push(self.lo);
            } else if !self.hi_open && x > self.hi && x <= self.hi + slack {
                out.push(self.hi);
            } else {
                bad.push(x);
            }
        }
        if bad.is_empty() {
            Ok(out)
        } else {
            Err(Error::SpectrumOutOfDomain { values: bad })
        }
    }
}

/// Eigen-decomposition `A = U diag(λ) U†` with `λ` ascending.
#[derive(Debug, Clone)]
pub struct Spectral {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl Spectral {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `U diag(g) U†`
    pub fn compose(&self, g: &[f64]) -> HermitianMatrix {
        let d = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..d {
            let s = g[j];
            for i in 0..d {
                scaled[(i, j)] *= s;
            }
        }
        HermitianMatrix::from_matrix_unchecked(&scaled * self.vectors.adjoint())
    }

    /// Applies `f` to the spectrum after checking it against `domain`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F, domain: &SpectralInterval) -> Result<HermitianMatrix> {
        let lam = domain.admit(&self.values, tol::spec(self.dim()))?;
        let g: Vec<f64> = lam.iter().map(|&x| f(x)).collect();
        Ok(self.compose(&g))
    }

    /// `U† E U`
    pub fn to_eigenbasis(&self, e: &DMatrix<C64>) -> DMatrix<C64> {
        self.vectors.adjoint() * e * &self.vectors
    }

    /// `U M U†`
    pub fn from_eigenbasis(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        &self.vectors * m * self.vectors.adjoint()
    }
}

/// Result of a Löwner comparison `A ⪯ B`.
#[derive(Debug, Clone)]
pub struct LoewnerOutcome {
    pub holds: bool,
    /// `λ_min(B − A)`
    pub min_eigenvalue: f64,
    /// Eigenvector for `min_eigenvalue` when the order fails.
    pub witness: Option<DVector<C64>>,
}

/// Dense d×d complex Hermitian matrix. Stored exactly Hermitian: the
/// constructor symmetrizes after validating within `tol_herm`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: DMatrix<C64>,
}

fn sup_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

impl HermitianMatrix {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be positive".into()));
        }
        let d = m.nrows();
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if dev.is_nan() || sup_abs(&m).is_nan() {
            return Err(Error::NotHermitian { deviation: f64::NAN, tol: 0.0 });
        }
        let t = tol::herm(sup_abs(&m));
        if dev > t {
            return Err(Error::NotHermitian { deviation: dev, tol: t });
        }
        Ok(Self::from_matrix_unchecked(m))
    }

    /// Takes the Hermitian part `(M + M†)/2` without validation.
    pub fn from_matrix_unchecked(mut m: DMatrix<C64>) -> Self {
        let d = m.nrows();
        for i in 0..d {
            m[(i, i)].im = 0.0;
            for j in (i + 1)..d {
                let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        Self { m }
    }

    /// Row-major real and imaginary parts.
    pub fn from_parts(d: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, found: re.len() });
        }
        if im.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, found: im.len() });
        }
        let m = DMatrix::from_fn(d, d, |i, j| C64::new(re[i * d + j], im[i * d + j]));
        Self::from_matrix(m)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Self { m: DMatrix::from_fn(d, d, |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) }) }
    }

    pub fn zeros(d: usize) -> Self {
        Self { m: DMatrix::zeros(d, d) }
    }

    pub fn identity(d: usize) -> Self {
        Self::scaled_identity(d, 1.0)
    }

    pub fn scaled_identity(d: usize, c: f64) -> Self {
        Self { m: DMatrix::from_diagonal_element(d, d, C64::new(c, 0.0)) }
    }

    /// Rank-one projector `v v† / ‖v‖²`.
    pub fn projector(v: &DVector<C64>) -> Self {
        let n = v.norm_squared();
        Self::from_matrix_unchecked(v * v.adjoint() / C64::new(n, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    /// Row-major `(re, im)`.
    pub fn to_parts(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                re.push(self.m[(i, j)].re);
                im.push(self.m[(i, j)].im);
            }
        }
        (re, im)
    }

    pub fn sup_norm(&self) -> f64 {
        sup_abs(&self.m)
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() })
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { m: &self.m * C64::new(c, 0.0) }
    }

    /// `t·self + (1−t)·other`
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        Self { m: &self.m * C64::new(t, 0.0) + &other.m * C64::new(1.0 - t, 0.0) }
    }

    /// Plain matrix product (generally not Hermitian).
    pub fn product(&self, other: &Self) -> DMatrix<C64> {
        &self.m * &other.m
    }

    pub fn square(&self) -> Self {
        Self::from_matrix_unchecked(&self.m * &self.m)
    }

    /// `A B + B A`
    pub fn anticommutator(&self, other: &Self) -> Self {
        let ab = &self.m * &other.m;
        Self::from_matrix_unchecked(&ab + ab.adjoint())
    }

    /// `‖AB − BA‖₂` (Frobenius).
    pub fn commutator_norm(&self, other: &Self) -> f64 {
        let ab = &self.m * &other.m;
        (&ab - ab.adjoint()).norm()
    }

    /// `X A X†`
    pub fn congruence(&self, x: &DMatrix<C64>) -> Self {
        Self::from_matrix_unchecked(x * &self.m * x.adjoint())
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    pub fn normalized_trace(&self) -> f64 {
        self.trace() / self.dim() as f64
    }

    /// Hilbert–Schmidt inner product `Tr A†B` (real for Hermitian pairs).
    pub fn inner(&self, other: &Self) -> f64 {
        self.m.iter().zip(other.m.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn spectral(&self) -> Spectral {
        let d = self.dim();
        let eig = self.m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
        Spectral { values, vectors }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectral().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    /// Largest absolute eigenvalue.
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn is_psd(&self, slack: f64) -> bool {
        self.min_eigenvalue() >= -slack
    }

    pub fn apply<F: Fn(f64) -> f64>(&self, f: F, domain: &SpectralInterval) -> Result<Self> {
        self.spectral().map(f, domain)
    }

    pub fn schatten_norm(&self, p: f64, normalized: bool) -> Result<f64> {
        schatten_from_eigenvalues(&self.eigenvalues(), p, normalized)
    }

    pub fn positive_part(&self) -> Self {
        let s = self.spectral();
        let g: Vec<f64> = s.values.iter().map(|&x| x.max(0.0)).collect();
        s.compose(&g)
    }

    /// `(−A)₊`, so that `A = A₊ − A₋`.
    pub fn negative_part(&self) -> Self {
        let s = self.spectral();
        let g: Vec<f64> = s.values.iter().map(|&x| (-x).max(0.0)).collect();
        s.compose(&g)
    }

    pub fn abs(&self) -> Self {
        let s = self.spectral();
        let g: Vec<f64> = s.values.iter().map(|&x| x.abs()).collect();
        s.compose(&g)
    }

    pub fn loewner_leq(&self, other: &Self, slack: f64) -> Result<LoewnerOutcome> {
        loewner_leq(self, other, slack)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        sup_abs(&(&self.m - &other.m))
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: Self) -> HermitianMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        HermitianMatrix { m: &self.m + &rhs.m }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: Self) -> HermitianMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        HermitianMatrix { m: &self.m - &rhs.m }
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        HermitianMatrix { m: -&self.m }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, c: f64) -> HermitianMatrix {
        self.scale(c)
    }
}

pub fn spectral_decompose(a: &HermitianMatrix) -> (Vec<f64>, DMatrix<C64>) {
    let s = a.spectral();
    (s.values, s.vectors)
}

pub fn apply_standard_function<F: Fn(f64) -> f64>(
    f: F,
    a: &HermitianMatrix,
    domain: &SpectralInterval,
) -> Result<HermitianMatrix> {
    a.apply(f, domain)
}

pub fn normalized_trace(a: &HermitianMatrix) -> f64 {
    a.normalized_trace()
}

pub fn schatten_norm(a: &HermitianMatrix, p: f64, normalized: bool) -> Result<f64> {
    a.schatten_norm(p, normalized)
}

pub fn schatten_from_eigenvalues(values: &[f64], p: f64, normalized: bool) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0, |a, x| a.max(x.abs())));
    }
    let mut s: f64 = values.iter().map(|x| libm::pow(x.abs(), p)).sum();
    if normalized {
        s /= values.len() as f64;
    }
    Ok(libm::pow(s, 1.0 / p))
}

pub fn positive_part(a: &HermitianMatrix) -> HermitianMatrix {
    a.positive_part()
}

pub fn loewner_leq(a: &HermitianMatrix, b: &HermitianMatrix, slack: f64) -> Result<LoewnerOutcome> {
    a.same_dim(b)?;
    let s = (b - a).spectral();
    let min = s.values[0];
    let holds = min >= -slack;
    let witness = if holds { None } else { Some(s.vectors.column(0).into_owned()) };
    Ok(LoewnerOutcome { holds, min_eigenvalue: min, witness })
}

pub(crate) fn cplx(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(d: usize, seed: u64) -> HermitianMatrix {
        // small deterministic LCG; the crate's samplers live in `rng`
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let m = DMatrix::from_fn(d, d, |_, _| C64::new(next(), next()));
        HermitianMatrix::from_matrix_unchecked(m)
    }

    #[test]
    fn diag_decomposes_ascending() {
        let a = HermitianMatrix::from_real_diagonal(&[3.0, -1.0]);
        let (l, u) = spectral_decompose(&a);
        assert_eq!(l, alloc::vec![-1.0, 3.0]);
        assert!((u[(1, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reconstruction_random() {
        for seed in 0..20 {
            let a = sample(4, seed);
            let s = a.spectral();
            let back = s.compose(&s.values);
            assert!(back.max_abs_diff(&a) < 1e-10);
            let utu = s.vectors.adjoint() * &s.vectors;
            assert!((utu - DMatrix::<C64>::identity(4, 4)).norm() < 1e-12);
            assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[cplx(1.0), cplx(2.0), cplx(0.0), cplx(1.0)]);
        assert!(matches!(HermitianMatrix::from_matrix(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn standard_function_examples() {
        let a = HermitianMatrix::from_real_diagonal(&[1.0, 2.0]);
        let sq = a.apply(|x| x * x, &SpectralInterval::real_line()).unwrap();
        assert!(sq.max_abs_diff(&HermitianMatrix::from_real_diagonal(&[1.0, 4.0])) < 1e-14);

        let h = HermitianMatrix::scaled_identity(2, 0.5);
        let r = h.apply(|x| x * libm::log(x), &SpectralInterval::nonnegative()).unwrap();
        assert!((r.get(0, 0).re - (-0.34657359027997264)).abs() < 1e-14);

        let neg = HermitianMatrix::from_real_diagonal(&[-1.0, 1.0]);
        match neg.apply(libm::sqrt, &SpectralInterval::nonnegative()) {
            Err(Error::SpectrumOutOfDomain { values }) => assert_eq!(values, alloc::vec![-1.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tiny_negative_eigenvalues_are_clamped() {
        let a = HermitianMatrix::from_real_diagonal(&[-1e-12, 1.0]);
        let r = a.apply(libm::sqrt, &SpectralInterval::nonnegative()).unwrap();
        assert_eq!(r.get(0, 0).re, 0.0);
        assert!(a.apply(libm::log, &SpectralInterval::positive()).is_err());
    }

    #[test]
    fn schatten_examples() {
        let i3 = HermitianMatrix::identity(3);
        assert!((i3.schatten_norm(2.0, false).unwrap() - 3f64.sqrt()).abs() < 1e-14);
        assert!((i3.schatten_norm(2.0, true).unwrap() - 1.0).abs() < 1e-14);
        let a = HermitianMatrix::from_real_diagonal(&[3.0, -4.0]);
        assert!((a.schatten_norm(1.0, false).unwrap() - 7.0).abs() < 1e-14);
        assert_eq!(a.schatten_norm(0.5, false), Err(Error::InvalidExponent(0.5)));
    }

    #[test]
    fn normalized_schatten_monotone() {
        for seed in 0..20 {
            let a = sample(4, 100 + seed);
            let ps = [1.0, 1.5, 2.0, 3.0];
            let v: Vec<f64> = ps.iter().map(|&p| a.schatten_norm(p, true).unwrap()).collect();
            assert!(v.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{v:?}");
        }
    }

    #[test]
    fn parts_and_trace_norm() {
        let a = HermitianMatrix::from_real_diagonal(&[2.0, -3.0]);
        assert!(a.positive_part().max_abs_diff(&HermitianMatrix::from_real_diagonal(&[2.0, 0.0])) < 1e-15);
        for seed in 0..20 {
            let a = sample(3, 200 + seed);
            let p = a.positive_part();
            let n = a.negative_part();
            assert!((&p - &n).max_abs_diff(&a) < 1e-12);
            assert!((p.product(&n)).norm() < 1e-10);
            let t1 = a.schatten_norm(1.0, false).unwrap();
            assert!((t1 - p.trace() - n.trace()).abs() < 1e-10);
            let scaled = a.scale(2.5).positive_part();
            assert!(scaled.max_abs_diff(&p.scale(2.5)) < 1e-12);
            assert!(p.positive_part().max_abs_diff(&p) < 1e-12);
        }
    }

    #[test]
    fn loewner_examples() {
        let a = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        let b = HermitianMatrix::from_real_diagonal(&[0.0, 1.0]);
        assert!(a.loewner_leq(&a, 0.0).unwrap().holds);
        assert!(HermitianMatrix::zeros(2).loewner_leq(&HermitianMatrix::from_real_diagonal(&[1.0, 2.0]), 0.0).unwrap().holds);
        let ab = a.loewner_leq(&b, 1e-12).unwrap();
        let ba = b.loewner_leq(&a, 1e-12).unwrap();
        assert!(!ab.holds && !ba.holds);
        assert!((ab.min_eigenvalue + 1.0).abs() < 1e-14);
        let w = ab.witness.unwrap();
        assert!((w[0].norm() - 1.0).abs() < 1e-12);
        assert!(matches!(a.loewner_leq(&HermitianMatrix::zeros(3), 0.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn trace_is_mean_eigenvalue() {
        for seed in 0..20 {
            let a = sample(5, 300 + seed);
            let mean = a.eigenvalues().iter().sum::<f64>() / 5.0;
            assert!((a.normalized_trace() - mean).abs() < 1e-12);
        }
    }
}
