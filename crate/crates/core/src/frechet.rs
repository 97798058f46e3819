//! Daleckiĭ–Kreĭn calculus: divided differences, first and second Fréchet
//! derivatives of standard matrix functions, superoperators, and the
//! commuting-tuple multivariate extension.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{cplx, HermitianMatrix, Spectral, C64};
use crate::scalar::ScalarFunction;
use crate::tol;

fn finite(x: f64, node: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::SpectrumOutOfDomain { values: vec![node] })
    }
}

fn dd1<F: ScalarFunction + ?Sized>(f: &F, a: f64, b: f64) -> f64 {
    if (a - b).abs() < tol::dd(a, b) {
        f.derivative(1, 0.5 * (a + b))
    } else {
        (f.value(a) - f.value(b)) / (a - b)
    }
}

fn dd2<F: ScalarFunction + ?Sized>(f: &F, a: f64, b: f64, c: f64) -> f64 {
    let mut n = [a, b, c];
    n.sort_by(f64::total_cmp);
    let [x, y, z] = n;
    let spread = z - x;
    let m = (x + y + z) / 3.0;
    if spread < tol::dd(x, z) {
        return 0.5 * f.derivative(2, m);
    }
    if spread < 1e3 * tol::dd(x, z) {
        // Hermite–Genocchi expansion about the mean; the cancellation in the
        // recursive quotient would dominate at this separation.
        let e2 = (x - m) * (x - m) + (y - m) * (y - m) + (z - m) * (z - m);
        return 0.5 * f.derivative(2, m) + f.derivative(4, m) * e2 / 48.0;
    }
    (dd1(f, x, y) - dd1(f, y, z)) / (x - z)
}

/// `f^{[1]}` or `f^{[2]}` on `nodes` (length 2 or 3).
pub fn divided_difference<F: ScalarFunction + ?Sized>(f: &F, nodes: &[f64]) -> Result<f64> {
    let dom = f.domain(0);
    dom.admit(nodes, 0.0)?;
    match nodes {
        [a, b] => finite(dd1(f, *a, *b), *a),
        [a, b, c] => finite(dd2(f, *a, *b, *c), *a),
        _ => Err(Error::InvalidArgument(alloc::format!("divided differences of order {} unsupported", nodes.len().saturating_sub(1)))),
    }
}

/// Divided differences tabulated on the spectrum of a matrix.
#[derive(Debug, Clone)]
pub struct DividedDifferenceTable {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl DividedDifferenceTable {
    pub fn first<F: ScalarFunction + ?Sized>(f: &F, nodes: &[f64]) -> Result<Self> {
        let d = nodes.len();
        let mut values = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let v = finite(dd1(f, nodes[i], nodes[j]), nodes[i])?;
                values[i * d + j] = v;
                values[j * d + i] = v;
            }
        }
        Ok(Self { order: 1, nodes: nodes.to_vec(), values })
    }

    pub fn second<F: ScalarFunction + ?Sized>(f: &F, nodes: &[f64]) -> Result<Self> {
        let d = nodes.len();
        let mut values = vec![0.0; d * d * d];
        for i in 0..d {
            for k in 0..d {
                for j in 0..d {
                    values[(i * d + k) * d + j] = finite(dd2(f, nodes[i], nodes[k], nodes[j]), nodes[i])?;
                }
            }
        }
        Ok(Self { order: 2, nodes: nodes.to_vec(), values })
    }

    pub fn get1(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nodes.len() + j]
    }

    pub fn get2(&self, i: usize, k: usize, j: usize) -> f64 {
        let d = self.nodes.len();
        self.values[(i * d + k) * d + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

fn spectrum_in<F: ScalarFunction + ?Sized>(f: &F, s: &Spectral, order: usize) -> Result<Vec<f64>> {
    f.domain(order).admit(&s.values, tol::spec(s.dim()))
}

fn check_dims(a: &HermitianMatrix, e: &HermitianMatrix) -> Result<()> {
    if a.dim() != e.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: e.dim() });
    }
    Ok(())
}

/// `Df[A](E)` given a precomputed decomposition of `A`.
pub fn frechet_derivative_spectral<F: ScalarFunction + ?Sized>(f: &F, s: &Spectral, e: &HermitianMatrix) -> Result<HermitianMatrix> {
    let nodes = spectrum_in(f, s, 1)?;
    let t = DividedDifferenceTable::first(f, &nodes)?;
    let mut et = s.to_eigenbasis(e.matrix());
    let d = s.dim();
    for i in 0..d {
        for j in 0..d {
            et[(i, j)] *= t.get1(i, j);
        }
    }
    Ok(HermitianMatrix::from_matrix_unchecked(s.from_eigenbasis(&et)))
}

pub fn frechet_derivative<F: ScalarFunction + ?Sized>(f: &F, a: &HermitianMatrix, e: &HermitianMatrix) -> Result<HermitianMatrix> {
    check_dims(a, e)?;
    frechet_derivative_spectral(f, &a.spectral(), e)
}

pub fn frechet_second_spectral<F: ScalarFunction + ?Sized>(
    f: &F,
    s: &Spectral,
    e1: &HermitianMatrix,
    e2: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    let nodes = spectrum_in(f, s, 2)?;
    let t = DividedDifferenceTable::second(f, &nodes)?;
    let a = s.to_eigenbasis(e1.matrix());
    let b = s.to_eigenbasis(e2.matrix());
    let d = s.dim();
    let r = DMatrix::from_fn(d, d, |i, j| {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..d {
            acc += (a[(i, k)] * b[(k, j)] + b[(i, k)] * a[(k, j)]) * t.get2(i, k, j);
        }
        acc
    });
    Ok(HermitianMatrix::from_matrix_unchecked(s.from_eigenbasis(&r)))
}

pub fn frechet_second<F: ScalarFunction + ?Sized>(
    f: &F,
    a: &HermitianMatrix,
    e1: &HermitianMatrix,
    e2: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    check_dims(a, e1)?;
    check_dims(a, e2)?;
    frechet_second_spectral(f, &a.spectral(), e1, e2)
}

/// Linear map on `M_d` as a d²×d² matrix in the column-stacking basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: DMatrix<C64>,
}

/// Column-stacking `vec`.
pub fn vectorize(m: &DMatrix<C64>) -> DMatrix<C64> {
    let d = m.nrows();
    DMatrix::from_fn(d * d, 1, |r, _| m[(r % d, r / d)])
}

pub fn unvectorize(v: &DMatrix<C64>, d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |i, j| v[(i + j * d, 0)])
}

impl Superoperator {
    pub fn from_matrix(dim: usize, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: matrix.nrows() });
        }
        Ok(Self { dim, matrix })
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        Self { dim, matrix: DMatrix::from_diagonal_element(dim * dim, dim * dim, cplx(c)) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn apply(&self, e: &DMatrix<C64>) -> DMatrix<C64> {
        unvectorize(&(&self.matrix * vectorize(e)), self.dim)
    }

    /// Applies to a Hermitian input; the output is projected onto its
    /// Hermitian part (exact for Hermitian-preserving maps).
    pub fn apply_hermitian(&self, e: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix::from_matrix_unchecked(self.apply(e.matrix()))
    }

    /// Adjoint with respect to the Hilbert–Schmidt inner product.
    pub fn adjoint(&self) -> Self {
        Self { dim: self.dim, matrix: self.matrix.adjoint() }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { dim: self.dim, matrix: &self.matrix * &other.matrix }
    }

    pub fn self_adjointness_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    /// Views a self-adjoint superoperator as a d²×d² Hermitian matrix, for
    /// Löwner comparisons between superoperators.
    pub fn to_hermitian(&self) -> Result<HermitianMatrix> {
        HermitianMatrix::from_matrix(self.matrix.clone())
    }

    /// Square roots of the eigenvalues of `M†M`, ascending (the Hermitian
    /// eigensolver is more dependable than the complex SVD).
    pub fn singular_values(&self) -> Vec<f64> {
        let g = self.matrix.adjoint() * &self.matrix;
        let mut v: Vec<f64> = HermitianMatrix::from_matrix_unchecked(g).eigenvalues().into_iter().map(|x| libm::sqrt(x.max(0.0))).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn operator_norm(&self) -> f64 {
        if self.self_adjointness_defect() < 1e-12 * (1.0 + self.matrix.norm()) {
            let e = HermitianMatrix::from_matrix_unchecked(self.matrix.clone()).eigenvalues();
            return e.iter().fold(0.0, |a, &x| a.max(x.abs()));
        }
        self.singular_values().last().copied().unwrap_or(0.0)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }
}

/// `(Ū ⊗ U) diag(w) (Uᵀ ⊗ U†)` with `w` indexed like the column-stacked
/// `vec`: the map `E ↦ U (W ⊙ U†EU) U†`.
fn eigenbasis_multiplier(s: &Spectral, w: impl Fn(usize, usize) -> f64) -> Superoperator {
    let d = s.dim();
    let u = &s.vectors;
    let left = u.conjugate().kronecker(u);
    let mut right = u.transpose().kronecker(&u.adjoint());
    for r in 0..d * d {
        let wr = w(r % d, r / d);
        for c in 0..d * d {
            right[(r, c)] *= wr;
        }
    }
    let mut m = left * right;
    let defect = (&m - m.adjoint()).norm();
    if defect < 1e-9 * (1.0 + m.norm()) {
        m = (&m + m.adjoint()) * cplx(0.5);
    }
    Superoperator { dim: d, matrix: m }
}

pub fn superoperator_of_spectral<F: ScalarFunction + ?Sized>(f: &F, s: &Spectral) -> Result<Superoperator> {
    let nodes = spectrum_in(f, s, 1)?;
    let t = DividedDifferenceTable::first(f, &nodes)?;
    Ok(eigenbasis_multiplier(s, |i, j| t.get1(i, j)))
}

/// `(Df[A])⁻¹` from reciprocal divided differences. Exact where a generic
/// inverse of the d²×d² matrix would have to rediscover the eigenbasis.
pub fn inverse_superoperator_of_spectral<F: ScalarFunction + ?Sized>(f: &F, s: &Spectral) -> Result<Superoperator> {
    let nodes = spectrum_in(f, s, 1)?;
    let t = DividedDifferenceTable::first(f, &nodes)?;
    let d = s.dim();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..d {
        for j in 0..d {
            let w = t.get1(i, j).abs();
            lo = lo.min(w);
            hi = hi.max(w);
        }
    }
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= tol::COND_MAX) {
        return Err(Error::SingularSuperoperator { sigma_min: lo, condition });
    }
    Ok(eigenbasis_multiplier(s, |i, j| 1.0 / t.get1(i, j)))
}

pub fn inverse_superoperator_of_derivative<F: ScalarFunction + ?Sized>(f: &F, a: &HermitianMatrix) -> Result<Superoperator> {
    inverse_superoperator_of_spectral(f, &a.spectral())
}

pub fn superoperator_of_derivative<F: ScalarFunction + ?Sized>(f: &F, a: &HermitianMatrix) -> Result<Superoperator> {
    superoperator_of_spectral(f, &a.spectral())
}

/// General inverse: rejects condition numbers above `COND_MAX`, and
/// verifies the result, since a silently inaccurate factorization would
/// otherwise surface as a bogus inequality violation downstream.
pub fn invert_superoperator(t: &Superoperator) -> Result<Superoperator> {
    let self_adjoint = t.self_adjointness_defect() < 1e-9 * (1.0 + t.matrix.norm());
    let sv = t.singular_values();
    let smax = sv.iter().fold(0.0f64, |a, &s| a.max(s));
    let smin = sv.iter().fold(f64::INFINITY, |a, &s| a.min(s));
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let singular = || Error::SingularSuperoperator { sigma_min: smin, condition };
    if !(condition <= tol::COND_MAX) {
        return Err(singular());
    }
    let inv = t.matrix.clone().try_inverse().ok_or_else(singular)?;
    let inv = if self_adjoint { (&inv + inv.adjoint()) * cplx(0.5) } else { inv };
    let n = t.matrix.nrows();
    let residual = (&t.matrix * &inv - DMatrix::<C64>::identity(n, n)).norm();
    if !(residual <= 1e-12 * condition.max(1.0) * n as f64) {
        return Err(Error::Inconsistent { what: "superoperator inverse".into(), deviation: residual });
    }
    Ok(Superoperator { dim: t.dim, matrix: inv })
}

/// Operator norm of `Df[A]` for the Frobenius norm on inputs and outputs.
pub fn frechet_norm<F: ScalarFunction + ?Sized>(f: &F, a: &HermitianMatrix) -> Result<f64> {
    Ok(superoperator_of_derivative(f, a)?.operator_norm())
}

/// A function of several real variables with its partial derivatives.
pub trait MultivariateFunction: Sync {
    fn arity(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn partial(&self, i: usize, x: &[f64]) -> f64;
}

/// Multivariate function built from plain function pointers.
#[derive(Clone, Copy)]
pub struct FnMultivariate {
    pub arity: usize,
    pub f: fn(&[f64]) -> f64,
    pub grad: fn(usize, &[f64]) -> f64,
}

impl MultivariateFunction for FnMultivariate {
    fn arity(&self) -> usize {
        self.arity
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn partial(&self, i: usize, x: &[f64]) -> f64 {
        (self.grad)(i, x)
    }
}

impl FnMultivariate {
    pub fn sum(arity: usize) -> Self {
        Self { arity, f: |x| x.iter().sum(), grad: |_, _| 1.0 }
    }

    pub fn sum_of_squares(arity: usize) -> Self {
        Self { arity, f: |x| x.iter().map(|v| v * v).sum(), grad: |i, x| 2.0 * x[i] }
    }

    pub fn product(arity: usize) -> Self {
        Self {
            arity,
            f: |x| x.iter().product(),
            grad: |i, x| x.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| *v).product(),
        }
    }
}

/// `φ_i(x̄, ȳ) = (f(x̄) − f(ȳ))(x_i − y_i)/‖x̄ − ȳ‖²`, with `∂_i f` on the diagonal.
pub fn multivariate_divided_difference<F: MultivariateFunction + ?Sized>(f: &F, i: usize, x: &[f64], y: &[f64]) -> f64 {
    let dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let scale: f64 = x.iter().chain(y).map(|v| v.abs()).sum();
    if libm::sqrt(dist2) < 1e-7 * (1.0 + scale) {
        let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
        f.partial(i, &mid)
    } else {
        (f.value(x) - f.value(y)) * (x[i] - y[i]) / dist2
    }
}

/// Common eigenbasis of a commuting tuple: returns `U` and, per eigenvector
/// `k`, the tuple of eigenvalues `λ̄_k`.
pub fn joint_diagonalize(xs: &[HermitianMatrix]) -> Result<(DMatrix<C64>, Vec<Vec<f64>>)> {
    let first = xs.first().ok_or_else(|| Error::InvalidArgument("empty tuple".into()))?;
    let d = first.dim();
    for x in xs {
        if x.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: x.dim() });
        }
    }
    let tc = tol::comm(d);
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            let norm = xs[i].commutator_norm(&xs[j]);
            if norm >= tc {
                return Err(Error::NotCommuting { i, j, norm });
            }
        }
    }
    // fixed irrational weights split degeneracies of any single member
    let mut acc = first.clone();
    for (k, x) in xs.iter().enumerate().skip(1) {
        let w = libm::fmod(0.6180339887498949 * (k as f64 + 1.0) + 0.1414213562, 1.0) + 0.05;
        acc = &acc + &x.scale(w);
    }
    let u = acc.spectral().vectors;
    let lams = (0..d)
        .map(|k| {
            xs.iter()
                .map(|x| {
                    let col = u.column(k);
                    (col.adjoint() * x.matrix() * col)[(0, 0)].re
                })
                .collect()
        })
        .collect();
    Ok((u, lams))
}

pub fn multivariate_partial_frechet<F: MultivariateFunction + ?Sized>(
    f: &F,
    xs: &[HermitianMatrix],
    i: usize,
    e: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    if i >= xs.len() {
        return Err(Error::IndexOutOfRange { index: i, len: xs.len() });
    }
    if f.arity() != xs.len() {
        return Err(Error::DimensionMismatch { expected: f.arity(), found: xs.len() });
    }
    let (u, lams) = joint_diagonalize(xs)?;
    check_dims(&xs[0], e)?;
    let d = u.nrows();
    let mut et = u.adjoint() * e.matrix() * &u;
    for k in 0..d {
        for l in 0..d {
            et[(k, l)] *= multivariate_divided_difference(f, i, &lams[k], &lams[l]);
        }
    }
    Ok(HermitianMatrix::from_matrix_unchecked(&u * et * u.adjoint()))
}

/// `f(X̄)` for a commuting tuple.
pub fn multivariate_apply<F: MultivariateFunction + ?Sized>(f: &F, xs: &[HermitianMatrix]) -> Result<HermitianMatrix> {
    let (u, lams) = joint_diagonalize(xs)?;
    let g: Vec<f64> = lams.iter().map(|l| f.value(l)).collect();
    let s = Spectral { values: g.clone(), vectors: u };
    Ok(s.compose(&g))
}

/// Checked inverse of a Hermitian matrix.
pub fn inverse(g: &HermitianMatrix) -> Result<HermitianMatrix> {
    let s = g.spectral();
    let (lo, hi) = s.values.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= tol::COND_MAX) {
        return Err(Error::SingularMatrix { condition });
    }
    let w: Vec<f64> = s.values.iter().map(|v| 1.0 / v).collect();
    Ok(s.compose(&w))
}

/// First and second derivatives of `t ↦ G(A + tE)⁻¹` from those of `G`.
pub fn inverse_map_derivatives(
    g: &HermitianMatrix,
    dg: &HermitianMatrix,
    d2g: &HermitianMatrix,
) -> Result<(HermitianMatrix, HermitianMatrix)> {
    check_dims(g, dg)?;
    check_dims(g, d2g)?;
    let gi = inverse(g)?;
    let gim = gi.matrix();
    let first = dg.congruence(gim).scale(-1.0);
    let mid = HermitianMatrix::from_matrix_unchecked(dg.matrix() * gim * dg.matrix());
    let second = &mid.congruence(gim).scale(2.0) - &d2g.congruence(gim);
    Ok((first, second))
}

/// Finite-difference oracles.
pub mod fd {
    use super::*;

    /// Richardson-extrapolated central first difference of `g` at 0.
    pub fn first<G>(g: G, h: f64) -> Result<HermitianMatrix>
    where
        G: Fn(f64) -> Result<HermitianMatrix>,
    {
        let d = |h: f64| -> Result<HermitianMatrix> { Ok((&g(h)? - &g(-h)?).scale(0.5 / h)) };
        let coarse = d(h)?;
        let fine = d(0.5 * h)?;
        Ok((&fine.scale(4.0) - &coarse).scale(1.0 / 3.0))
    }

    /// Central second difference of `g` at 0, extrapolated twice (steps
    /// `h`, `h/2`, `h/4`; error `O(h⁶)`), so that `h` can stay large enough
    /// for the `1/h²` roundoff to be harmless.
    pub fn second<G>(g: G, h: f64) -> Result<HermitianMatrix>
    where
        G: Fn(f64) -> Result<HermitianMatrix>,
    {
        let g0 = g(0.0)?;
        let d = |h: f64| -> Result<HermitianMatrix> {
            let s = &g(h)? + &g(-h)?;
            Ok((&s - &g0.scale(2.0)).scale(1.0 / (h * h)))
        };
        let (d1, d2, d4) = (d(h)?, d(0.5 * h)?, d(0.25 * h)?);
        let r1 = (&d2.scale(4.0) - &d1).scale(1.0 / 3.0);
        let r2 = (&d4.scale(4.0) - &d2).scale(1.0 / 3.0);
        Ok((&r2.scale(16.0) - &r1).scale(1.0 / 15.0))
    }

    /// Step `base·(1+‖A‖)/‖E‖`, so the perturbation `hE` has size
    /// `base·(1+‖A‖)`, shrunk to stay a safe distance inside a domain
    /// bounded below by `lower` (pass `-∞` for none).
    pub fn step(a: &HermitianMatrix, e: &HermitianMatrix, base: f64, lower: f64) -> f64 {
        step_within(a, e, base, lower, 0.01)
    }

    /// [`step`] with the perturbation allowed to cover `reach` of the
    /// distance to the domain boundary.
    pub fn step_within(a: &HermitianMatrix, e: &HermitianMatrix, base: f64, lower: f64, reach: f64) -> f64 {
        let en = e.operator_norm().max(1e-300);
        let mut h = base * (1.0 + a.operator_norm()) / en;
        if lower.is_finite() {
            let room = a.min_eigenvalue() - lower;
            h = h.min(reach * room / en);
        }
        h
    }

    /// `f(A + tE)` as a closure for the oracles above.
    pub fn along<'a, F: ScalarFunction + ?Sized>(
        f: &'a F,
        a: &'a HermitianMatrix,
        e: &'a HermitianMatrix,
    ) -> impl Fn(f64) -> Result<HermitianMatrix> + 'a {
        move |t| (a + &e.scale(t)).apply(|x| f.value(x), &f.domain(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::StandardFunction as S;

    fn herm(d: usize, seed: u64) -> HermitianMatrix {
        let mut s = seed.wrapping_add(0x9E3779B97F4A7C15);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        HermitianMatrix::from_matrix_unchecked(DMatrix::from_fn(d, d, |_, _| C64::new(next(), next())))
    }

    fn psd(d: usize, seed: u64) -> HermitianMatrix {
        let g = herm(d, seed);
        &g.square() + &HermitianMatrix::scaled_identity(d, 0.2)
    }

    #[test]
    fn scalar_divided_differences() {
        let sq = S::Power(2.0);
        assert!((divided_difference(&sq, &[1.0, 3.0]).unwrap() - 4.0).abs() < 1e-14);
        assert!((divided_difference(&sq, &[2.0, 2.0]).unwrap() - 4.0).abs() < 1e-14);
        let e = core::f64::consts::E;
        let v = divided_difference(&S::XLogX, &[1.0, e]).unwrap();
        assert!((v - e / (e - 1.0)).abs() < 1e-12);
        assert!((divided_difference(&sq, &[1.0, 2.0, 5.0]).unwrap() - 1.0).abs() < 1e-13);
        assert!(matches!(divided_difference(&S::Log, &[-1.0, 1.0]), Err(Error::SpectrumOutOfDomain { .. })));
    }

    #[test]
    fn second_order_near_confluent() {
        // x log x: f^{[2]}(a,a,a) = 1/(2a)
        for &gap in &[0.0, 1e-9, 1e-6, 1e-5, 1e-3] {
            let v = divided_difference(&S::XLogX, &[1.0, 1.0 + gap, 1.0 + 2.0 * gap]).unwrap();
            // exact f^{[2]} on an arithmetic progression, to high order
            let exact = 0.5 / (1.0 + gap) + gap * gap / (12.0 * (1.0 + gap).powi(3));
            assert!((v - exact).abs() < 1e-8, "gap {gap}: {v} vs {exact}");
        }
    }

    #[test]
    fn table_symmetry() {
        let nodes = [0.5, 1.5, 1.5, 4.0];
        let t1 = DividedDifferenceTable::first(&S::XLogX, &nodes).unwrap();
        let t2 = DividedDifferenceTable::second(&S::XLogX, &nodes).unwrap();
        for (i, &x) in nodes.iter().enumerate() {
            assert!((t1.get1(i, i) - S::XLogX.derivative(1, x)).abs() < 1e-12);
            for j in 0..4 {
                assert_eq!(t1.get1(i, j), t1.get1(j, i));
                for k in 0..4 {
                    let v = t2.get2(i, k, j);
                    assert!((v - t2.get2(k, i, j)).abs() < 1e-12);
                    assert!((v - t2.get2(j, k, i)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn quadratic_derivatives_are_algebraic() {
        let a = herm(3, 1);
        let e = herm(3, 2);
        let e2 = herm(3, 3);
        let df = frechet_derivative(&S::Power(2.0), &a, &e).unwrap();
        assert!(df.max_abs_diff(&a.anticommutator(&e)) < 1e-12);
        let d2 = frechet_second(&S::Power(2.0), &a, &e, &e2).unwrap();
        assert!(d2.max_abs_diff(&e.anticommutator(&e2)) < 1e-12);
        let aff = frechet_second(&S::Affine { a: 2.0, b: 1.0 }, &a, &e, &e2).unwrap();
        assert!(aff.max_abs_diff(&HermitianMatrix::zeros(3)) < 1e-14);
        let di = frechet_derivative(&S::XLogX, &psd(3, 4), &HermitianMatrix::identity(3)).unwrap();
        let fp = psd(3, 4).apply(|x| libm::log(x) + 1.0, &S::XLogX.domain(1)).unwrap();
        assert!(di.max_abs_diff(&fp) < 1e-12);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for seed in 0..10 {
            let a = psd(3, 10 + seed);
            let e = herm(3, 50 + seed);
            for f in [S::XLogX, S::Power(1.5), S::Exp] {
                let dk = frechet_derivative(&f, &a, &e).unwrap();
                let h = fd::step(&a, &e, 1e-5, 0.0);
                let num = fd::first(fd::along(&f, &a, &e), h).unwrap();
                assert!((&dk - &num).frobenius_norm() < 1e-7 * (1.0 + num.frobenius_norm()), "{f:?}");
                let d2 = frechet_second(&f, &a, &e, &e).unwrap();
                let h2 = fd::step(&a, &e, 1e-3, 0.0);
                let num2 = fd::second(fd::along(&f, &a, &e), h2).unwrap();
                assert!((&d2 - &num2).frobenius_norm() < 1e-5 * (1.0 + num2.frobenius_norm()), "{f:?}");
            }
        }
    }

    #[test]
    fn superoperator_examples() {
        let a = herm(3, 7);
        let psi = S::Affine { a: 2.0, b: 0.0 };
        let t = superoperator_of_derivative(&psi, &a).unwrap();
        assert!(t.distance(&Superoperator::scaled_identity(3, 2.0)) < 1e-12);
        let inv = invert_superoperator(&t).unwrap();
        assert!(inv.distance(&Superoperator::scaled_identity(3, 0.5)) < 1e-12);

        let one = HermitianMatrix::from_real_diagonal(&[2.0]);
        let t1 = superoperator_of_derivative(&S::XLogX, &one).unwrap();
        assert!((t1.matrix()[(0, 0)].re - (libm::log(2.0) + 1.0)).abs() < 1e-14);

        let log1 = crate::scalar::Shifted { inner: S::XLogX, shift: 1 };
        let t = superoperator_of_derivative(&log1, &HermitianMatrix::from_real_diagonal(&[1.0, 2.0])).unwrap();
        let mut ev = t.to_hermitian().unwrap().eigenvalues();
        ev.sort_by(f64::total_cmp);
        let ln2 = core::f64::consts::LN_2;
        let mut want = [0.5, ln2, ln2, 1.0];
        want.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(want.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn superoperator_acts_like_derivative() {
        let a = psd(3, 21);
        let e = herm(3, 22);
        let t = superoperator_of_derivative(&S::XLogX, &a).unwrap();
        let direct = frechet_derivative(&S::XLogX, &a, &e).unwrap();
        assert!(t.apply_hermitian(&e).max_abs_diff(&direct) < 1e-12);
        assert!(t.self_adjointness_defect() < 1e-12);
        let inv = invert_superoperator(&t).unwrap();
        let id = Superoperator::scaled_identity(3, 1.0);
        assert!(inv.compose(&t).distance(&id) < 1e-8);
    }

    #[test]
    fn singular_superoperator_rejected() {
        let t = superoperator_of_derivative(&S::Affine { a: 0.0, b: 1.0 }, &herm(2, 1)).unwrap();
        assert!(matches!(invert_superoperator(&t), Err(Error::SingularSuperoperator { .. })));
    }

    #[test]
    fn frechet_norm_examples() {
        let a = HermitianMatrix::from_real_diagonal(&[1.0, 2.0]);
        assert!((frechet_norm(&S::Power(2.0), &a).unwrap() - 4.0).abs() < 1e-12);
        assert!((frechet_norm(&S::Power(1.0), &herm(3, 5)).unwrap() - 1.0).abs() < 1e-12);
        let b = psd(3, 31);
        let nrm = frechet_norm(&S::XLogX, &b).unwrap();
        for k in 0..100 {
            let e = herm(3, 1000 + k);
            let r = frechet_derivative(&S::XLogX, &b, &e).unwrap().frobenius_norm() / e.frobenius_norm();
            assert!(r <= nrm * (1.0 + 1e-12));
        }
    }

    #[test]
    fn multivariate_reduces_and_linear() {
        let a = HermitianMatrix::from_real_diagonal(&[0.2, 0.7, 0.4]);
        let b = HermitianMatrix::from_real_diagonal(&[0.9, 0.1, 0.3]);
        let e = herm(3, 9);
        let single = FnMultivariate { arity: 1, f: |x| x[0] * x[0], grad: |_, x| 2.0 * x[0] };
        let mv = multivariate_partial_frechet(&single, core::slice::from_ref(&a), 0, &e).unwrap();
        let dk = frechet_derivative(&S::Power(2.0), &a, &e).unwrap();
        assert!(mv.max_abs_diff(&dk) < 1e-12);

        // linear: exact on the diagonal; off-diagonal weight is the
        // projection (x_1−y_1)(Σ Δ)/‖Δ‖²
        let lin = multivariate_partial_frechet(&FnMultivariate::sum(2), &[a.clone(), b.clone()], 0, &e).unwrap();
        let diag_e = HermitianMatrix::from_real_diagonal(&[1.0, -2.0, 0.5]);
        let lin_d = multivariate_partial_frechet(&FnMultivariate::sum(2), &[a.clone(), b.clone()], 0, &diag_e).unwrap();
        assert!(lin_d.max_abs_diff(&diag_e) < 1e-12);
        let (x, y): ([f64; 2], [f64; 2]) = ([0.2, 0.9], [0.7, 0.1]);
        let w = (x[0] - y[0]) * ((x[0] + x[1]) - (y[0] + y[1])) / ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2));
        assert!((lin.get(0, 1) - e.get(0, 1) * w).norm() < 1e-12);
    }

    #[test]
    fn multivariate_product_diagonal_matches_fd() {
        let a = HermitianMatrix::from_real_diagonal(&[0.2, 0.7]);
        let b = HermitianMatrix::from_real_diagonal(&[0.9, 0.1]);
        let e = HermitianMatrix::from_real_diagonal(&[0.3, -0.6]);
        let r = multivariate_partial_frechet(&FnMultivariate::product(2), &[a.clone(), b.clone()], 0, &e).unwrap();
        // diagonal entries: ∂₁(x₁x₂) = λ(X₂)
        assert!((r.get(0, 0).re - 0.9 * 0.3).abs() < 1e-12);
        assert!((r.get(1, 1).re - 0.1 * -0.6).abs() < 1e-12);
        let g = |t: f64| multivariate_apply(&FnMultivariate::product(2), &[&a + &e.scale(t), b.clone()]);
        let num = fd::first(g, 1e-5).unwrap();
        assert!(r.max_abs_diff(&num) < 1e-7);
    }

    #[test]
    fn non_commuting_rejected() {
        let a = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        let b = HermitianMatrix::from_parts(2, &[0.0, 1.0, 1.0, 0.0], &[0.0; 4]).unwrap();
        let e = HermitianMatrix::identity(2);
        assert!(matches!(
            multivariate_partial_frechet(&FnMultivariate::sum(2), &[a, b], 0, &e),
            Err(Error::NotCommuting { i: 0, j: 1, .. })
        ));
    }

    #[test]
    fn inverse_map_examples() {
        let e = herm(3, 40);
        let (first, second) = inverse_map_derivatives(&HermitianMatrix::identity(3), &e, &HermitianMatrix::zeros(3)).unwrap();
        assert!(first.max_abs_diff(&e.scale(-1.0)) < 1e-13);
        assert!(second.max_abs_diff(&e.square().scale(2.0)) < 1e-12);

        // g(a) = a², dg = 2ah, d²g = 2h²: d/dt (a+th)⁻² = −2h/a³
        let (a, h) = (1.7, 0.3);
        let g = HermitianMatrix::from_real_diagonal(&[a * a]);
        let dg = HermitianMatrix::from_real_diagonal(&[2.0 * a * h]);
        let d2g = HermitianMatrix::from_real_diagonal(&[2.0 * h * h]);
        let (f1, f2) = inverse_map_derivatives(&g, &dg, &d2g).unwrap();
        assert!((f1.get(0, 0).re + 2.0 * h / (a * a * a)).abs() < 1e-13);
        assert!((f2.get(0, 0).re - 6.0 * h * h / a.powi(4)).abs() < 1e-12);

        let g = psd(3, 41);
        let (f1, _) = inverse_map_derivatives(&g, &e, &HermitianMatrix::zeros(3)).unwrap();
        let num = fd::first(|t| inverse(&(&g + &e.scale(t))), 1e-4).unwrap();
        assert!(f1.max_abs_diff(&num) < 1e-7);

        assert!(matches!(
            inverse_map_derivatives(&HermitianMatrix::zeros(2), &HermitianMatrix::zeros(2), &HermitianMatrix::zeros(2)),
            Err(Error::SingularMatrix { .. })
        ));
    }
}
