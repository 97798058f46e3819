//! Fourier–Walsh analysis of matrix-valued functions on `{0,1}ⁿ`.
//!
//! Points are bitmasks: bit `i` of `x` is the coordinate `x_{i+1}`; subsets
//! `S ⊆ [n]` use the same encoding.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;

use crate::concentration::efron_stein_quantity;
use crate::entropy::ProductModel;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::linalg::{HermitianMatrix, SpectralInterval, C64};
use crate::report::{CheckReport, Meta, Outcome};
use crate::rng::{self, keyed};
use crate::tol;

/// Largest supported cube dimension.
pub const MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBooleanFunction {
    n: usize,
    d: usize,
    table: Vec<HermitianMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierTable {
    n: usize,
    d: usize,
    coeffs: Vec<HermitianMatrix>,
}

fn check_table(n: usize, table: &[HermitianMatrix]) -> Result<usize> {
    if n > MAX_N {
        return Err(Error::EnumerationTooLarge { size: 1u128 << n, limit: 1u128 << MAX_N });
    }
    if table.len() != 1 << n {
        return Err(Error::DimensionMismatch { expected: 1 << n, found: table.len() });
    }
    let d = table[0].dim();
    if let Some(m) = table.iter().find(|m| m.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: m.dim() });
    }
    Ok(d)
}

impl MatrixBooleanFunction {
    pub fn new(n: usize, table: Vec<HermitianMatrix>) -> Result<Self> {
        let d = check_table(n, &table)?;
        Ok(Self { n, d, table })
    }

    pub fn from_fn<F: Fn(usize) -> HermitianMatrix>(n: usize, f: F) -> Result<Self> {
        Self::new(n, (0..1usize << n.min(MAX_N + 1)).map(f).collect())
    }

    pub fn constant(n: usize, c: HermitianMatrix) -> Self {
        Self { n, d: c.dim(), table: vec![c; 1 << n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn table(&self) -> &[HermitianMatrix] {
        &self.table
    }

    pub fn at(&self, x: usize) -> &HermitianMatrix {
        &self.table[x]
    }

    pub fn is_psd(&self) -> bool {
        self.table.iter().all(|m| m.is_psd(tol::spec(self.d)))
    }

    fn require_psd(&self) -> Result<()> {
        for m in &self.table {
            let l = m.min_eigenvalue();
            if l < -tol::spec(self.d) {
                return Err(Error::NotPositiveSemidefinite { min_eigenvalue: l });
            }
        }
        Ok(())
    }

    /// `E f(X)` under the uniform measure.
    pub fn mean(&self) -> HermitianMatrix {
        average(self.table.iter().cloned())
    }

    pub fn map<G: Fn(&HermitianMatrix) -> Result<HermitianMatrix>>(&self, g: G) -> Result<Self> {
        Ok(Self { n: self.n, d: self.d, table: self.table.iter().map(g).collect::<Result<_>>()? })
    }

    /// The uniform-cube product model with `Z = f(X)`.
    pub fn product_model(&self) -> Result<ProductModel> {
        ProductModel::from_fn(vec![vec![0.5, 0.5]; self.n], |labels| {
            let x = labels.iter().enumerate().fold(0usize, |acc, (i, &l)| acc | (l << i));
            self.table[x].clone()
        })
    }
}

fn average<I: Iterator<Item = HermitianMatrix>>(it: I) -> HermitianMatrix {
    let mut acc: Option<HermitianMatrix> = None;
    let mut k = 0usize;
    for m in it {
        acc = Some(match acc {
            None => m,
            Some(a) => &a + &m,
        });
        k += 1;
    }
    acc.expect("non-empty table").scale(1.0 / k as f64)
}

impl FourierTable {
    pub fn new(n: usize, coeffs: Vec<HermitianMatrix>) -> Result<Self> {
        let d = check_table(n, &coeffs)?;
        Ok(Self { n, d, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coeffs(&self) -> &[HermitianMatrix] {
        &self.coeffs
    }

    pub fn coeff(&self, s: usize) -> &HermitianMatrix {
        &self.coeffs[s]
    }
}

/// In-place unnormalized Walsh–Hadamard butterflies over a table of
/// `d×d` blocks.
fn walsh_hadamard(table: &[HermitianMatrix], n: usize, scale: f64) -> Vec<HermitianMatrix> {
    let d = table[0].dim();
    let dd = d * d;
    let mut buf: Vec<C64> = Vec::with_capacity(table.len() * dd);
    for m in table {
        buf.extend(m.matrix().iter().cloned());
    }
    let mut h = 1;
    while h < (1 << n) {
        for start in (0..1usize << n).step_by(2 * h) {
            for x in start..start + h {
                let (a, b) = (x * dd, (x + h) * dd);
                for k in 0..dd {
                    let u = buf[a + k];
                    let v = buf[b + k];
                    buf[a + k] = u + v;
                    buf[b + k] = u - v;
                }
            }
        }
        h *= 2;
    }
    buf.chunks(dd)
        .map(|c| HermitianMatrix::from_matrix_unchecked(DMatrix::from_column_slice(d, d, c) * C64::new(scale, 0.0)))
        .collect()
}

/// `f̂(S) = 2⁻ⁿ Σₓ f(x) χ_S(x)`, `χ_S(x) = (−1)^{|S ∩ x|}`.
pub fn fourier_transform(f: &MatrixBooleanFunction) -> FourierTable {
    let scale = 1.0 / (1u64 << f.n) as f64;
    FourierTable { n: f.n, d: f.d, coeffs: walsh_hadamard(&f.table, f.n, scale) }
}

pub fn inverse_fourier(t: &FourierTable) -> MatrixBooleanFunction {
    MatrixBooleanFunction { n: t.n, d: t.d, table: walsh_hadamard(&t.coeffs, t.n, 1.0) }
}

/// `T_γ`: scales `f̂(S)` by `γ^{|S|}`.
pub fn noise_operator(t: &FourierTable, gamma: f64) -> FourierTable {
    let coeffs = t.coeffs.iter().enumerate().map(|(s, c)| c.scale(libm::pow(gamma, s.count_ones() as f64))).collect();
    FourierTable { n: t.n, d: t.d, coeffs }
}

/// Entrywise deviation between `E f(X)²` and `Σ_S f̂(S)²`.
pub fn parseval_deviation(f: &MatrixBooleanFunction) -> (f64, f64) {
    let t = fourier_transform(f);
    let lhs = average(f.table.iter().map(|m| m.square()));
    let rhs = t.coeffs.iter().fold(HermitianMatrix::zeros(f.d), |acc, c| &acc + &c.square());
    (lhs.max_abs_diff(&rhs), lhs.sup_norm())
}

pub fn parseval_check(f: &MatrixBooleanFunction, seed: u64) -> CheckReport {
    let (dev, scale) = parseval_deviation(f);
    CheckReport::single(Meta::new("parseval", f.d, f.n, seed), Outcome::identity(dev, 1e-10 * (1.0 + scale)))
}

/// `Σ_S |S| tr f̂(S)²`
pub fn dirichlet_spectral(t: &FourierTable) -> f64 {
    t.coeffs.iter().enumerate().map(|(s, c)| s.count_ones() as f64 * c.square().normalized_trace()).sum()
}

/// `Σᵢ E tr gᵢ(X)²` with `gᵢ(x) = (f(x) − f(x ⊕ eᵢ))/2`.
pub fn dirichlet_flips(f: &MatrixBooleanFunction) -> f64 {
    let mut acc = 0.0;
    for i in 0..f.n {
        for x in 0..f.table.len() {
            acc += (&f.table[x] - &f.table[x ^ (1 << i)]).scale(0.5).square().normalized_trace();
        }
    }
    acc / f.table.len() as f64
}

/// The Dirichlet energy `E(f)`, cross-checked between the spectral form,
/// the flip form and the Efron–Stein enumeration.
pub fn dirichlet_energy(f: &MatrixBooleanFunction) -> Result<f64> {
    let spectral = dirichlet_spectral(&fourier_transform(f));
    let flips = dirichlet_flips(f);
    let es = efron_stein_quantity(&f.product_model()?)?;
    let dev = (spectral - flips).abs().max((spectral - es).abs());
    if dev > 1e-10 * (1.0 + spectral.abs()) {
        return Err(Error::Inconsistent { what: "Dirichlet energy forms".into(), deviation: dev });
    }
    Ok(spectral)
}

pub fn dirichlet_check(f: &MatrixBooleanFunction, seed: u64) -> Result<CheckReport> {
    let spectral = dirichlet_spectral(&fourier_transform(f));
    let flips = dirichlet_flips(f);
    let es = efron_stein_quantity(&f.product_model()?)?;
    let dev = (spectral - flips).abs().max((spectral - es).abs());
    Ok(CheckReport::single(Meta::new("dirichlet", f.d, f.n, seed), Outcome::identity(dev, 1e-10 * (1.0 + spectral.abs()))))
}

/// `(lhs, rhs)` of the Bonami–Beckner inequality
/// `(Σ_S (p−1)^{|S|} ‖f̂(S)‖²_{*p})^{1/2} ≤ (E ‖f(X)‖^p_{*p})^{1/p}` with
/// normalized Schatten norms.
pub fn bonami_beckner_sides(f: &MatrixBooleanFunction, p: f64) -> Result<(f64, f64)> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::InvalidExponent(p));
    }
    let t = fourier_transform(f);
    let mut lhs = 0.0;
    for (s, c) in t.coeffs.iter().enumerate() {
        let k = s.count_ones();
        let w = if k == 0 { 1.0 } else { libm::pow(p - 1.0, k as f64) };
        if w != 0.0 {
            let nrm = c.schatten_norm(p, true)?;
            lhs += w * nrm * nrm;
        }
    }
    let mut rhs = 0.0;
    for m in &f.table {
        rhs += libm::pow(m.schatten_norm(p, true)?, p);
    }
    rhs /= f.table.len() as f64;
    Ok((libm::sqrt(lhs), libm::pow(rhs, 1.0 / p)))
}

pub fn check_bonami_beckner(f: &MatrixBooleanFunction, p: f64, seed: u64) -> Result<CheckReport> {
    let (lhs, rhs) = bonami_beckner_sides(f, p)?;
    let meta = Meta::new("bonami-beckner", f.d, f.n, seed).phi(alloc::format!("power:{p}"));
    Ok(CheckReport::single(meta, Outcome::new(lhs, rhs, tol::conv(rhs))))
}

fn psd_apply<G: Fn(f64) -> f64>(a: &HermitianMatrix, g: G) -> Result<HermitianMatrix> {
    let s = a.spectral();
    let v = SpectralInterval::nonnegative().admit(&s.values, tol::spec(a.dim()))?;
    let w: Vec<f64> = v.into_iter().map(g).collect();
    Ok(s.compose(&w))
}

fn xlogx(x: f64) -> f64 {
    if x < 1e-14 {
        0.0
    } else {
        x * libm::log(x)
    }
}

/// `tr E f² = tr E[(f^p)^{2/p}]`.
fn second_moment(f: &MatrixBooleanFunction) -> f64 {
    f.table.iter().map(|m| m.square().normalized_trace()).sum::<f64>() / f.table.len() as f64
}

/// `(H_Φ(f^p), (2−p)E(f)d^{1−2/p} + tr E f² (1 − d^{1−2/p}))` for `Φ = u^{2/p}`.
pub fn phi_sobolev_sides(f: &MatrixBooleanFunction, p: f64) -> Result<(f64, f64)> {
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::InvalidExponent(p));
    }
    f.require_psd()?;
    let m2 = second_moment(f);
    let fp = average(f.table.iter().map(|m| psd_apply(m, |x| libm::pow(x, p))).collect::<Result<Vec<_>>>()?.into_iter());
    let lhs = m2 - psd_apply(&fp, |x| libm::pow(x, 2.0 / p))?.normalized_trace();
    let k = libm::pow(f.d as f64, 1.0 - 2.0 / p);
    let rhs = (2.0 - p) * dirichlet_energy(f)? * k + m2 * (1.0 - k);
    Ok((lhs, rhs))
}

pub fn check_phi_sobolev(f: &MatrixBooleanFunction, p: f64, seed: u64) -> Result<CheckReport> {
    let (lhs, rhs) = phi_sobolev_sides(f, p)?;
    let meta = Meta::new("phi-sobolev", f.d, f.n, seed).phi(alloc::format!("power:{}", 2.0 / p));
    Ok(CheckReport::single(meta, Outcome::new(lhs, rhs, tol::conv(rhs.abs().max(lhs.abs())))))
}

/// `Ent(f²) = tr E[f² log f²] − tr[(E f²) log(E f²)]`.
pub fn entropy_of_square(f: &MatrixBooleanFunction) -> Result<f64> {
    f.require_psd()?;
    let mut acc = 0.0;
    for m in &f.table {
        let v = SpectralInterval::nonnegative().admit(&m.eigenvalues(), tol::spec(f.d))?;
        acc += v.iter().map(|x| xlogx(x * x)).sum::<f64>() / f.d as f64;
    }
    acc /= f.table.len() as f64;
    let m2 = average(f.table.iter().map(|m| m.square()));
    let v = SpectralInterval::nonnegative().admit(&m2.eigenvalues(), tol::spec(f.d))?;
    Ok(acc - v.iter().map(|&x| xlogx(x)).sum::<f64>() / f.d as f64)
}

/// `(Ent(f²), 2E(f) + log(d) tr E f²)`.
pub fn log_sobolev_sides(f: &MatrixBooleanFunction) -> Result<(f64, f64)> {
    let ent = entropy_of_square(f)?;
    let rhs = 2.0 * dirichlet_energy(f)? + libm::log(f.d as f64) * second_moment(f);
    Ok((ent, rhs))
}

pub fn check_log_sobolev(f: &MatrixBooleanFunction, seed: u64) -> Result<CheckReport> {
    let (lhs, rhs) = log_sobolev_sides(f)?;
    let meta = Meta::new("log-sobolev", f.d, f.n, seed);
    Ok(CheckReport::single(meta, Outcome::new(lhs, rhs, tol::conv(rhs.abs().max(lhs.abs())))))
}

/// `(Var_p[Z]/(2−p)` at the grid, its Richardson extrapolation, the limit).
#[derive(Debug, Clone, PartialEq)]
pub struct PVarianceLimit {
    pub grid: Vec<(f64, HermitianMatrix)>,
    pub extrapolated: HermitianMatrix,
    pub limit: HermitianMatrix,
    /// `‖ratio(p) − limit‖₂` at each grid point.
    pub residuals: Vec<f64>,
    pub deviation: f64,
}

pub const P_GRID: [f64; 3] = [1.9, 1.99, 1.999];

impl PVarianceLimit {
    /// Residuals are `O(2 − p)`: the slope `residual/(2 − p)` at the point
    /// nearest 2 is at most twice the largest slope further out (a
    /// sublinear rate would grow it by ≈√10 per step). Residuals under a
    /// roundoff floor count as converged. Slopes rather than successive
    /// ratios, because first- and second-order terms can cancel at a single
    /// grid point.
    pub fn shrinks_linearly(&self) -> bool {
        let floor = 1e-9 * (1.0 + self.limit.frobenius_norm());
        let slopes: Vec<f64> = self.grid.iter().zip(&self.residuals).map(|((p, _), r)| r / (2.0 - p)).collect();
        match (self.residuals.last(), slopes.split_last()) {
            (Some(&last), Some((&s, rest))) if !rest.is_empty() => {
                last <= floor || s <= 2.0 * rest.iter().copied().fold(0.0, f64::max)
            }
            _ => true,
        }
    }
}

/// `Var_p[Z] = E Z² − (E Z^p)^{2/p}`.
pub fn p_variance(z: &crate::entropy::DiscreteRandomMatrix, p: f64) -> Result<HermitianMatrix> {
    let d = z.dim();
    let mut m2 = HermitianMatrix::zeros(d);
    let mut mp = HermitianMatrix::zeros(d);
    for (w, v) in z.support() {
        m2 = &m2 + &v.square().scale(*w);
        mp = &mp + &psd_apply(v, |x| libm::pow(x, p))?.scale(*w);
    }
    Ok(&m2 - &psd_apply(&mp, |x| libm::pow(x, 2.0 / p))?)
}

pub fn p_variance_limit(z: &crate::entropy::DiscreteRandomMatrix) -> Result<PVarianceLimit> {
    let d = z.dim();
    let positive = SpectralInterval::positive();
    let mut m2 = HermitianMatrix::zeros(d);
    let mut ent = HermitianMatrix::zeros(d);
    for (w, v) in z.support() {
        positive.admit(&v.eigenvalues(), 0.0)?;
        let sq = v.square();
        ent = &ent + &sq.apply(xlogx, &SpectralInterval::nonnegative())?.scale(*w);
        m2 = &m2 + &sq.scale(*w);
    }
    let limit = (&ent - &m2.apply(xlogx, &SpectralInterval::nonnegative())?).scale(0.5);
    let mut grid = Vec::with_capacity(P_GRID.len());
    for &p in &P_GRID {
        grid.push((p, p_variance(z, p)?.scale(1.0 / (2.0 - p))));
    }
    // first-order Richardson on the two finest points (ε ratio 10)
    let extrapolated = (&grid[2].1.scale(10.0) - &grid[1].1).scale(1.0 / 9.0);
    let residuals = grid.iter().map(|(_, r)| (r - &limit).frobenius_norm()).collect();
    let deviation = (&extrapolated - &limit).frobenius_norm();
    Ok(PVarianceLimit { grid, extrapolated, limit, residuals, deviation })
}

pub fn check_p_variance_limit(z: &crate::entropy::DiscreteRandomMatrix, seed: u64) -> Result<CheckReport> {
    let r = p_variance_limit(z)?;
    let linear = r.shrinks_linearly();
    let meta = Meta::new("p-variance-limit", z.dim(), 0, seed);
    let mut report = CheckReport::single(meta, Outcome::identity(r.deviation, 1e-4));
    if !linear {
        report.pass = false;
        report = report.note("residuals do not shrink linearly in 2 - p");
    }
    Ok(report)
}

/// A found (or best) log-Sobolev witness.
#[derive(Debug, Clone, PartialEq)]
pub struct LsiSearch {
    pub found: bool,
    pub f: MatrixBooleanFunction,
    pub ent: f64,
    pub energy: f64,
    pub objective: f64,
    pub restart: u64,
}

/// `Ent(f²) − 2E(f)` after normalizing `tr E f² = 1` (the objective is
/// 2-homogeneous); `None` for `f ≡ 0`.
pub fn lsi_objective(f: &MatrixBooleanFunction) -> Result<Option<(f64, f64)>> {
    let m2 = second_moment(f);
    if m2 <= 1e-300 {
        return Ok(None);
    }
    let g = f.map(|m| Ok(m.scale(1.0 / libm::sqrt(m2))))?;
    let ent = entropy_of_square(&g)?;
    let energy = dirichlet_spectral(&fourier_transform(&g));
    Ok(Some((ent, energy)))
}

fn table_from_factors(n: usize, factors: &[DMatrix<C64>]) -> MatrixBooleanFunction {
    let table = factors.iter().map(|g| HermitianMatrix::from_matrix_unchecked(g.adjoint() * g)).collect();
    MatrixBooleanFunction { n, d: factors[0].ncols(), table }
}

/// Consecutive failed proposals before the step is halved.
pub const SEARCH_PATIENCE: usize = 20;
pub const SEARCH_INITIAL_STEP: f64 = 0.1;

fn climb(d: usize, n: usize, steps: usize, seed: u64, restart: u64) -> Result<(f64, Vec<DMatrix<C64>>)> {
    let mut r = keyed(seed, "lsi-search", restart);
    // alternate the factor rank so low-rank (boundary) tables are reachable
    let rank = 1 + (restart as usize % d);
    let mut g: Vec<DMatrix<C64>> = (0..1usize << n).map(|_| rng::ginibre(&mut r, rank, d)).collect();
    let score = |g: &[DMatrix<C64>]| -> Result<f64> {
        Ok(match lsi_objective(&table_from_factors(n, g))? {
            Some((e, en)) => e - 2.0 * en,
            None => f64::NEG_INFINITY,
        })
    };
    let mut best = score(&g)?;
    let mut step = SEARCH_INITIAL_STEP;
    let mut fails = 0;
    for _ in 0..steps {
        let x = r.random_range(0..g.len());
        let old = g[x].clone();
        let noise = rng::ginibre(&mut r, rank, d) * C64::new(step, 0.0);
        g[x] = &old + noise;
        let s = score(&g)?;
        if s > best {
            best = s;
            fails = 0;
        } else {
            g[x] = old;
            fails += 1;
            if fails >= SEARCH_PATIENCE {
                step *= 0.5;
                fails = 0;
                if step < 1e-8 {
                    break;
                }
            }
        }
    }
    Ok((best, g))
}

/// Random-restart hill climbing on `Ent(f²) − 2E(f)` over PSD tables
/// `f(x) = G_x†G_x`. Restarts run through `exec`; the best witness wins,
/// ties going to the lower restart index. The winner is re-evaluated from
/// its raw table with the flip form of the energy.
pub fn search_lsi_counterexample<E: Executor>(exec: &E, d: usize, n: usize, restarts: u64, steps: usize, seed: u64) -> Result<LsiSearch> {
    if d == 0 || n > MAX_N {
        return Err(Error::InvalidArgument(alloc::format!("search needs d >= 1 and n <= {MAX_N}")));
    }
    let runs = exec.map(restarts.max(1) as usize, |k| climb(d, n, steps, seed, k as u64));
    let mut best: Option<(f64, u64, Vec<DMatrix<C64>>)> = None;
    for (k, run) in runs.into_iter().enumerate() {
        let (s, g) = run?;
        if best.as_ref().is_none_or(|(b, _, _)| s > *b) {
            best = Some((s, k as u64, g));
        }
    }
    let (_, restart, g) = best.expect("at least one restart");
    let raw = table_from_factors(n, &g);
    let m2 = second_moment(&raw);
    let f = raw.map(|m| Ok(m.scale(1.0 / libm::sqrt(m2))))?;
    let ent = entropy_of_square(&f)?;
    let energy = dirichlet_flips(&f);
    let (ent_s, energy_s) = lsi_objective(&f)?.unwrap_or((0.0, 0.0));
    let dev = (ent - ent_s).abs().max((energy - energy_s).abs());
    if dev > 1e-10 {
        return Err(Error::Inconsistent { what: "witness re-evaluation".into(), deviation: dev });
    }
    let objective = ent - 2.0 * energy;
    Ok(LsiSearch { found: objective > 1e-6, f, ent, energy, objective, restart })
}

/// Random PSD-valued table (values from the shared PSD sampler).
pub fn random_psd_function<R: Rng + ?Sized>(r: &mut R, n: usize, d: usize) -> MatrixBooleanFunction {
    MatrixBooleanFunction { n, d, table: (0..1usize << n).map(|_| rng::psd(r, d)).collect() }
}

pub fn random_hermitian_function<R: Rng + ?Sized>(r: &mut R, n: usize, d: usize) -> MatrixBooleanFunction {
    MatrixBooleanFunction { n, d, table: (0..1usize << n).map(|_| rng::hermitian(r, d)).collect() }
}
