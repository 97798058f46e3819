//! Efron–Stein and Poincaré-type inequalities for random matrices, GUE
//! sampling, and Monte Carlo checks of the Gaussian inequalities.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;

use crate::entropy::{phi_entropy, DiscreteRandomMatrix, ProductModel};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::frechet::{fd, joint_diagonalize, multivariate_apply, multivariate_divided_difference, MultivariateFunction};
use crate::linalg::{HermitianMatrix, SpectralInterval, C64};
use crate::phi::PhiFunction;
use crate::report::{CheckReport, Meta, Outcome};
use crate::rng::{self, keyed, CheckRng};
use crate::scalar::ScalarFunction;
use crate::tol;

/// The three equivalent forms of the Efron–Stein quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfronStein {
    /// `½ Σᵢ tr E (Z − Zᵢ')²`
    pub resample: f64,
    /// `Σᵢ tr E (Z − Eᵢ Z)²`
    pub conditional: f64,
    /// `Σᵢ tr E (Z − Zᵢ')₊²`
    pub plus: f64,
}

impl EfronStein {
    pub fn max_deviation(&self) -> f64 {
        (self.resample - self.conditional).abs().max((self.resample - self.plus).abs())
    }
}

/// All three forms by exact enumeration over `(X, Xᵢ')`.
pub fn efron_stein_forms(model: &ProductModel) -> EfronStein {
    let mut es = EfronStein { resample: 0.0, conditional: 0.0, plus: 0.0 };
    for i in 0..model.n() {
        for idx in 0..model.size() {
            let p = model.prob(idx);
            if p == 0.0 {
                continue;
            }
            let z = model.value(idx);
            let cm = model.conditional_mean(idx, i);
            es.conditional += p * (z - &cm).square().normalized_trace();
            for (l, q) in model.laws()[i].iter().enumerate() {
                if *q == 0.0 {
                    continue;
                }
                let diff = z - model.value(model.with_label(idx, i, l));
                es.resample += 0.5 * p * q * diff.square().normalized_trace();
                es.plus += p * q * diff.positive_part().square().normalized_trace();
            }
        }
    }
    es
}

/// `E(Z)`, with the three forms cross-checked against each other.
pub fn efron_stein_quantity(model: &ProductModel) -> Result<f64> {
    let es = efron_stein_forms(model);
    let dev = es.max_deviation();
    if dev > 1e-10 * (1.0 + es.resample.abs()) {
        return Err(Error::Inconsistent { what: "Efron-Stein forms".into(), deviation: dev });
    }
    Ok(es.resample)
}

/// `tr[E Z² − (E Z)²]`
pub fn variance(z: &DiscreteRandomMatrix) -> f64 {
    let mut m2 = 0.0;
    for (p, v) in z.support() {
        m2 += p * v.square().normalized_trace();
    }
    m2 - z.mean().square().normalized_trace()
}

pub fn check_efron_stein(model: &ProductModel, seed: u64) -> Result<CheckReport> {
    let var = variance(&model.law());
    let e = efron_stein_quantity(model)?;
    let meta = Meta::new("efron-stein", model.d(), model.n(), seed);
    Ok(CheckReport::single(meta, Outcome::new(var, e, tol::entropy(e))))
}

fn plus_pow(a: &HermitianMatrix, q: u32) -> HermitianMatrix {
    let s = a.spectral();
    let v: Vec<f64> = s.values.iter().map(|x| libm::pow(x.max(0.0), q as f64)).collect();
    s.compose(&v)
}

fn abs_pow(a: &HermitianMatrix, q: u32) -> HermitianMatrix {
    let s = a.spectral();
    let v: Vec<f64> = s.values.iter().map(|x| libm::pow(x.abs(), q as f64)).collect();
    s.compose(&v)
}

/// Largest deviation among the positive/negative-part identities for an
/// i.i.d. pair, all traced, plus the matrix identity `E(X−EX)² = ½E(X−Y)²`.
pub fn plus_identity_deviation(z: &DiscreteRandomMatrix, q: u32) -> Result<(f64, f64)> {
    if !(1..=3).contains(&q) {
        return Err(Error::InvalidArgument(alloc::format!("q must be 1, 2 or 3, got {q}")));
    }
    let mean = z.mean();
    let (mut abs1, mut pos1, mut neg1) = (0.0, 0.0, 0.0);
    let mut c2 = HermitianMatrix::zeros(z.dim());
    for (p, x) in z.support() {
        let c = x - &mean;
        abs1 += p * abs_pow(&c, q).normalized_trace();
        pos1 += p * plus_pow(&c, q).normalized_trace();
        neg1 += p * plus_pow(&-&c, q).normalized_trace();
        c2 = &c2 + &c.square().scale(*p);
    }
    let (mut abs2, mut pos2, mut neg2) = (0.0, 0.0, 0.0);
    let mut d2 = HermitianMatrix::zeros(z.dim());
    for (p, x) in z.support() {
        for (r, y) in z.support() {
            let w = p * r;
            let c = x - y;
            abs2 += w * abs_pow(&c, q).normalized_trace();
            pos2 += w * plus_pow(&c, q).normalized_trace();
            neg2 += w * plus_pow(&-&c, q).normalized_trace();
            d2 = &d2 + &c.square().scale(w);
        }
    }
    let dev = [
        (abs1 - pos1 - neg1).abs(),
        (0.5 * abs2 - pos2).abs(),
        (pos2 - neg2).abs(),
        c2.max_abs_diff(&d2.scale(0.5)),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok((dev, abs1.max(abs2)))
}

pub fn check_plus_identities(z: &DiscreteRandomMatrix, q: u32, seed: u64) -> Result<CheckReport> {
    let (dev, scale) = plus_identity_deviation(z, q)?;
    let meta = Meta::new("plus-identities", z.dim(), 0, seed);
    Ok(CheckReport::single(meta, Outcome::identity(dev, 1e-10 * (1.0 + scale))))
}

/// A map from tuples of matrices to a Hermitian matrix.
pub trait MatrixEvaluator: Sync {
    fn eval(&self, xs: &[HermitianMatrix]) -> Result<HermitianMatrix>;

    /// `‖D_{Xᵢ}L[X]‖₂` in closed form, when available.
    fn derivative_norm(&self, _xs: &[HermitianMatrix], _i: usize) -> Option<Result<f64>> {
        None
    }
}

impl<T: MatrixEvaluator + ?Sized> MatrixEvaluator for &T {
    fn eval(&self, xs: &[HermitianMatrix]) -> Result<HermitianMatrix> {
        (**self).eval(xs)
    }
    fn derivative_norm(&self, xs: &[HermitianMatrix], i: usize) -> Option<Result<f64>> {
        (**self).derivative_norm(xs, i)
    }
}

/// Wraps a closure; derivatives come from finite differences.
pub struct FnEvaluator<F>(pub F);

impl<F: Fn(&[HermitianMatrix]) -> Result<HermitianMatrix> + Sync> MatrixEvaluator for FnEvaluator<F> {
    fn eval(&self, xs: &[HermitianMatrix]) -> Result<HermitianMatrix> {
        (self.0)(xs)
    }
}

/// `L(X) = Σᵢ wᵢ f(Xᵢ)` for a standard matrix function `f`.
pub struct SpectralSum<F> {
    pub f: F,
    pub weights: Vec<f64>,
}

impl<F: ScalarFunction> MatrixEvaluator for SpectralSum<F> {
    fn eval(&self, xs: &[HermitianMatrix]) -> Result<HermitianMatrix> {
        check_arity(self.weights.len(), xs)?;
        let mut acc = HermitianMatrix::zeros(xs[0].dim());
        for (w, x) in self.weights.iter().zip(xs) {
            if *w != 0.0 {
                acc = &acc + &x.apply(|t| self.f.value(t), &self.f.domain(0))?.scale(*w);
            }
        }
        Ok(acc)
    }

    fn derivative_norm(&self, xs: &[HermitianMatrix], i: usize) -> Option<Result<f64>> {
        let w = *self.weights.get(i)?;
        if w == 0.0 {
            return Some(Ok(0.0));
        }
        Some(crate::frechet::frechet_norm(&self.f, &xs[i]).map(|n| w.abs() * n))
    }
}

/// `L(X) = f(X₁,…,Xₙ)` for a commuting tuple; the derivative norm is the
/// sup of the divided-difference Schur multiplier.
pub struct Commuting<F>(pub F);

impl<F: MultivariateFunction> MatrixEvaluator for Commuting<F> {
    fn eval(&self, xs: &[HermitianMatrix]) -> Result<HermitianMatrix> {
        multivariate_apply(&self.0, xs)
    }

    fn derivative_norm(&self, xs: &[HermitianMatrix], i: usize) -> Option<Result<f64>> {
        Some(commuting_multiplier_sup(&self.0, xs, i))
    }
}

/// `max_{k,l} |φᵢ(λ̄_k, λ̄_l)|` in the common eigenbasis.
pub fn commuting_multiplier_sup<F: MultivariateFunction + ?Sized>(f: &F, xs: &[HermitianMatrix], i: usize) -> Result<f64> {
    if i >= xs.len() {
        return Err(Error::IndexOutOfRange { index: i, len: xs.len() });
    }
    let (_, lams) = joint_diagonalize(xs)?;
    let mut sup: f64 = 0.0;
    for a in &lams {
        for b in &lams {
            sup = sup.max(multivariate_divided_difference(f, i, a, b).abs());
        }
    }
    Ok(sup)
}

fn check_arity(n: usize, xs: &[HermitianMatrix]) -> Result<()> {
    if xs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: xs.len() });
    }
    Ok(())
}

/// Orthonormal (Frobenius) basis of the real space of d×d Hermitian matrices.
pub fn hermitian_basis(d: usize) -> Vec<HermitianMatrix> {
    let r = core::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        for l in k..d {
            if k == l {
                let mut m = DMatrix::zeros(d, d);
                m[(k, k)] = C64::new(1.0, 0.0);
                out.push(HermitianMatrix::from_matrix_unchecked(m));
            } else {
                let mut re = DMatrix::zeros(d, d);
                re[(k, l)] = C64::new(r, 0.0);
                re[(l, k)] = C64::new(r, 0.0);
                out.push(HermitianMatrix::from_matrix_unchecked(re));
                let mut im = DMatrix::zeros(d, d);
                im[(k, l)] = C64::new(0.0, r);
                im[(l, k)] = C64::new(0.0, -r);
                out.push(HermitianMatrix::from_matrix_unchecked(im));
            }
        }
    }
    out
}

fn coordinates(m: &HermitianMatrix, basis: &[HermitianMatrix]) -> Vec<f64> {
    basis.iter().map(|b| b.inner(m)).collect()
}

/// `‖D_{Xᵢ}L[X]‖₂` by central differences: the Jacobian over a Hermitian
/// basis is materialized and its largest singular value returned.
pub fn fd_derivative_norm<L: MatrixEvaluator + ?Sized>(ev: &L, xs: &[HermitianMatrix], i: usize) -> Result<f64> {
    if i >= xs.len() {
        return Err(Error::IndexOutOfRange { index: i, len: xs.len() });
    }
    let d1 = xs[i].dim();
    let h = 1e-4 * (1.0 + xs[i].operator_norm());
    let in_basis = hermitian_basis(d1);
    let mut cols: Vec<HermitianMatrix> = Vec::with_capacity(in_basis.len());
    let mut work = xs.to_vec();
    for e in &in_basis {
        let col = fd::first(
            |t| {
                let mut w = work.clone();
                w[i] = &xs[i] + &e.scale(t);
                ev.eval(&w)
            },
            h,
        )?;
        cols.push(col);
    }
    work.clear();
    let d2 = cols[0].dim();
    let out_basis = hermitian_basis(d2);
    let mut jac = DMatrix::<f64>::zeros(out_basis.len(), in_basis.len());
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in coordinates(col, &out_basis).into_iter().enumerate() {
            jac[(r, c)] = v;
        }
    }
    // largest singular value from the symmetric eigenproblem of JᵀJ
    let g = jac.transpose() * &jac;
    let top = g.symmetric_eigen().eigenvalues.iter().cloned().fold(0.0, f64::max);
    Ok(libm::sqrt(top))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

/// `‖D_{Xᵢ}L[X]‖₂`, analytic when requested and available.
pub fn derivative_norm<L: MatrixEvaluator + ?Sized>(ev: &L, xs: &[HermitianMatrix], i: usize, mode: DerivativeMode) -> Result<(f64, DerivativeMode)> {
    if mode == DerivativeMode::Analytic {
        if let Some(n) = ev.derivative_norm(xs, i) {
            return Ok((n?, DerivativeMode::Analytic));
        }
    }
    Ok((fd_derivative_norm(ev, xs, i)?, DerivativeMode::FiniteDifference))
}

/// Independent matrix inputs with values in `[0, I]` and an evaluator.
pub struct MatrixInputModel<L> {
    laws: Vec<Vec<(f64, HermitianMatrix)>>,
    evaluator: L,
}

impl<L: MatrixEvaluator> MatrixInputModel<L> {
    pub fn new(laws: Vec<Vec<(f64, HermitianMatrix)>>, evaluator: L) -> Result<Self> {
        let d = laws.first().and_then(|l| l.first()).map(|(_, m)| m.dim()).unwrap_or(1);
        for law in &laws {
            let s: f64 = law.iter().map(|(p, _)| p).sum();
            if law.is_empty() || (s - 1.0).abs() > 1e-12 || law.iter().any(|(p, _)| *p < 0.0) {
                return Err(Error::InvalidDistribution(alloc::format!("input law sums to {s}")));
            }
            for (_, m) in law {
                if m.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: m.dim() });
                }
                let ev = m.eigenvalues();
                let slack = tol::spec(d);
                if ev[0] < -slack || ev[d - 1] > 1.0 + slack {
                    return Err(Error::SpectrumOutOfDomain { values: ev });
                }
            }
        }
        Ok(Self { laws, evaluator })
    }

    pub fn n(&self) -> usize {
        self.laws.len()
    }

    pub fn laws(&self) -> &[Vec<(f64, HermitianMatrix)>] {
        &self.laws
    }

    pub fn evaluator(&self) -> &L {
        &self.evaluator
    }

    pub fn inputs(&self, labels: &[usize]) -> Vec<HermitianMatrix> {
        labels.iter().enumerate().map(|(i, &l)| self.laws[i][l].1.clone()).collect()
    }

    /// The tabulated `Z = L(X)`.
    pub fn product_model(&self) -> Result<ProductModel> {
        let probs = self.laws.iter().map(|l| l.iter().map(|(p, _)| *p).collect()).collect();
        ProductModel::try_from_fn(probs, |labels| self.evaluator.eval(&self.inputs(labels)))
    }

    pub fn efron_stein(&self) -> Result<f64> {
        efron_stein_quantity(&self.product_model()?)
    }
}

/// Randomized midpoint test of operator convexity of `L` in each coordinate
/// separately (`probes` per coordinate, the others frozen at a support point).
pub fn spot_check_separate_convexity<L: MatrixEvaluator>(model: &MatrixInputModel<L>, probes: usize, seed: u64) -> Result<()> {
    let d = model.laws[0][0].1.dim();
    for i in 0..model.n() {
        let mut r = keyed(seed, "separate-convexity", i as u64);
        for _ in 0..probes {
            let labels: Vec<usize> = model.laws.iter().map(|l| r.random_range(0..l.len())).collect();
            let mut xs = model.inputs(&labels);
            let y1 = rng::unit_interval(&mut r, d);
            let y2 = rng::unit_interval(&mut r, d);
            let t = rng::uniform(&mut r);
            xs[i] = y1.clone();
            let l1 = model.evaluator.eval(&xs)?;
            xs[i] = y2.clone();
            let l2 = model.evaluator.eval(&xs)?;
            xs[i] = y1.lerp(&y2, t);
            let lm = model.evaluator.eval(&xs)?;
            let gap = (&lm - &l1.lerp(&l2, t)).max_eigenvalue();
            let scale = l1.operator_norm().max(l2.operator_norm());
            if gap > tol::conv(scale) {
                return Err(Error::SeparateConvexityViolated { coordinate: i, gap });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareOptions {
    pub mode: DerivativeMode,
    /// Seed for the separate-convexity spot check; `None` skips it.
    pub spot_check: Option<u64>,
    pub probes: usize,
}

impl Default for PoincareOptions {
    fn default() -> Self {
        Self { mode: DerivativeMode::Analytic, spot_check: Some(0), probes: 50 }
    }
}

/// `(Var L(X), Σᵢ E‖D_{Xᵢ}L[X]‖₂², mode used)` by exact enumeration.
pub fn poincare_sides<L: MatrixEvaluator>(model: &MatrixInputModel<L>, mode: DerivativeMode) -> Result<(f64, f64, DerivativeMode)> {
    let pm = model.product_model()?;
    let var = variance(&pm.law());
    let mut bound = 0.0;
    let mut used = DerivativeMode::Analytic;
    for idx in 0..pm.size() {
        let p = pm.prob(idx);
        if p == 0.0 {
            continue;
        }
        let xs = model.inputs(&pm.labels(idx));
        for i in 0..model.n() {
            let (nrm, m) = derivative_norm(&model.evaluator, &xs, i, mode)?;
            if m == DerivativeMode::FiniteDifference {
                used = m;
            }
            bound += p * nrm * nrm;
        }
    }
    Ok((var, bound, used))
}

pub fn check_poincare<L: MatrixEvaluator>(model: &MatrixInputModel<L>, opts: PoincareOptions, seed: u64) -> Result<CheckReport> {
    if let Some(s) = opts.spot_check {
        spot_check_separate_convexity(model, opts.probes, s)?;
    }
    let (var, bound, used) = poincare_sides(model, opts.mode)?;
    let d = model.laws[0][0].1.dim();
    let meta = Meta::new("poincare", d, model.n(), seed);
    let mut r = CheckReport::single(meta, Outcome::new(var, bound, tol::conv(bound)));
    if used == DerivativeMode::FiniteDifference {
        r = r.note("derivative norms from finite differences");
    }
    Ok(r)
}

/// Poincaré bound for a multivariate standard function of commuting inputs.
pub fn check_poincare_commuting<F: MultivariateFunction>(laws: Vec<Vec<(f64, HermitianMatrix)>>, f: F, seed: u64) -> Result<CheckReport> {
    let model = MatrixInputModel::new(laws, Commuting(f))?;
    let pm = model.product_model()?;
    let d = model.laws[0][0].1.dim();
    for idx in 0..pm.size() {
        let xs = model.inputs(&pm.labels(idx));
        for a in 0..xs.len() {
            for b in a + 1..xs.len() {
                let norm = xs[a].commutator_norm(&xs[b]);
                if norm > tol::comm(d) {
                    return Err(Error::NotCommuting { i: a, j: b, norm });
                }
            }
        }
    }
    let (var, bound, _) = poincare_sides(&model, DerivativeMode::Analytic)?;
    let meta = Meta::new("poincare-commuting", d, model.n(), seed);
    Ok(CheckReport::single(meta, Outcome::new(var, bound, tol::conv(bound))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    pub variance: f64,
    /// Grid estimate; a lower bound on the true constant.
    pub lipschitz_const: f64,
    pub ratio: f64,
    pub grid_density: usize,
}

/// Cap on grid evaluations for the Lipschitz estimate.
pub const LIPSCHITZ_GRID_CAP: usize = 1_000_000;

/// `‖f‖_Λ` over grid neighbours in ℓ¹ (the sup over all grid pairs is
/// attained on neighbours by the triangle inequality along lattice paths),
/// together with `Var f(X)` for commuting inputs.
pub fn lipschitz_report<F: MultivariateFunction>(laws: Vec<Vec<(f64, HermitianMatrix)>>, f: F, grid_density: usize) -> Result<LipschitzReport> {
    let n = f.arity();
    let mut g = grid_density.max(2);
    while n > 0 && libm::pow(g as f64, n as f64) > LIPSCHITZ_GRID_CAP as f64 {
        g -= 1;
    }
    let total = if n == 0 { 1 } else { g.pow(n as u32) };
    let step = 1.0 / (g - 1) as f64;
    let point = |k: usize| -> Vec<f64> {
        let mut k = k;
        (0..n)
            .map(|_| {
                let c = k % g;
                k /= g;
                c as f64 * step
            })
            .collect()
    };
    let values: Vec<f64> = (0..total).map(|k| f.value(&point(k))).collect();
    let mut lip: f64 = 0.0;
    for k in 0..total {
        let mut stride = 1;
        for _ in 0..n {
            if (k / stride) % g + 1 < g {
                lip = lip.max((values[k + stride] - values[k]).abs() / step);
            }
            stride *= g;
        }
    }
    let model = MatrixInputModel::new(laws, Commuting(f))?;
    let variance = variance(&model.product_model()?.law());
    let ratio = if lip > 0.0 { variance / (lip * lip) } else { 0.0 };
    Ok(LipschitzReport { variance, lipschitz_const: lip, ratio, grid_density: g })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GueSample {
    pub d: usize,
    pub matrix: HermitianMatrix,
}

/// Real standard normal diagonal, complex off-diagonal with `E|z|² = 1`.
pub fn sample_gue<R: Rng + ?Sized>(r: &mut R, d: usize) -> GueSample {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let mut m = DMatrix::zeros(d, d);
    for k in 0..d {
        m[(k, k)] = C64::new(rng::normal(r), 0.0);
        for l in k + 1..d {
            let z = C64::new(s * rng::normal(r), s * rng::normal(r));
            m[(k, l)] = z;
            m[(l, k)] = z.conj();
        }
    }
    GueSample { d, matrix: HermitianMatrix::from_matrix_unchecked(m) }
}

/// `S_m = m^{-1/2} Σⱼ εⱼ Yⱼ` with `Yⱼ = ((W + iW') + (W + iW')†)/2` and
/// `W, W'` matrices of independent signs.
pub fn gue_clt_sample<R: Rng + ?Sized>(r: &mut R, d: usize, m: usize) -> HermitianMatrix {
    let mut acc = vec![C64::new(0.0, 0.0); d * d];
    for _ in 0..m {
        let eps = rng::rademacher(r);
        let w: Vec<f64> = (0..d * d).map(|_| rng::rademacher(r)).collect();
        let wp: Vec<f64> = (0..d * d).map(|_| rng::rademacher(r)).collect();
        for k in 0..d {
            for l in 0..d {
                // Y_kl = ((W_kl + W_lk) + i(W'_kl − W'_lk)) / 2
                let y = C64::new(w[k * d + l] + w[l * d + k], wp[k * d + l] - wp[l * d + k]) * 0.5;
                acc[k * d + l] += y * eps;
            }
        }
    }
    let s = 1.0 / libm::sqrt(m as f64);
    HermitianMatrix::from_matrix_unchecked(DMatrix::from_fn(d, d, |k, l| acc[k * d + l] * s))
}

/// Independent Monte Carlo streams; results depend only on `(seed, samples)`.
pub const MC_STREAMS: usize = 32;

/// Per-stream running sums.
#[derive(Debug, Clone)]
pub struct Moments {
    pub count: u64,
    pub mats: Vec<HermitianMatrix>,
    pub scalars: Vec<f64>,
}

impl Moments {
    pub fn new(d: usize, mats: usize, scalars: usize) -> Self {
        Self { count: 0, mats: vec![HermitianMatrix::zeros(d); mats], scalars: vec![0.0; scalars] }
    }

    pub fn merge(&mut self, o: &Moments) {
        self.count += o.count;
        for (a, b) in self.mats.iter_mut().zip(&o.mats) {
            *a = &*a + b;
        }
        for (a, b) in self.scalars.iter_mut().zip(&o.scalars) {
            *a += b;
        }
    }

    pub fn mean_mat(&self, k: usize) -> HermitianMatrix {
        self.mats[k].scale(1.0 / self.count as f64)
    }

    pub fn mean(&self, k: usize) -> f64 {
        self.scalars[k] / self.count as f64
    }
}

/// Runs `samples` draws split over [`MC_STREAMS`] keyed streams, evaluates
/// `(lhs, rhs)` from the pooled moments, and uses the spread of the
/// per-stream differences as the standard error. Passes iff
/// `lhs − rhs ≤ 3·stderr + tol_conv`.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo<E, S, G>(exec: &E, meta: Meta, samples: u64, shape: (usize, usize, usize), draw: S, sides: G) -> Result<CheckReport>
where
    E: Executor,
    S: Fn(&mut CheckRng, &mut Moments) -> Result<()> + Sync + Send,
    G: Fn(&Moments) -> Result<(f64, f64)>,
{
    let (d, nm, ns) = shape;
    let streams = MC_STREAMS.min(samples.max(1) as usize);
    let per = samples / streams as u64;
    let rem = samples % streams as u64;
    let seed = meta.seed;
    let name = meta.check.clone();
    let parts = exec.map(streams, |s| -> Result<Moments> {
        let mut r = keyed(seed, &name, s as u64);
        let mut m = Moments::new(d, nm, ns);
        let k = per + u64::from((s as u64) < rem);
        for _ in 0..k {
            draw(&mut r, &mut m)?;
            m.count += 1;
        }
        Ok(m)
    });
    let mut pooled = Moments::new(d, nm, ns);
    let mut diffs = Vec::with_capacity(streams);
    for p in parts {
        let p = p?;
        if p.count > 0 {
            let (l, r) = sides(&p)?;
            diffs.push(l - r);
        }
        pooled.merge(&p);
    }
    let (lhs, rhs) = sides(&pooled)?;
    let k = diffs.len() as f64;
    let se = if k > 1.0 {
        let mu = diffs.iter().sum::<f64>() / k;
        libm::sqrt(diffs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (k - 1.0) / k)
    } else {
        f64::INFINITY
    };
    let tol = 3.0 * se + tol::conv(lhs.abs().max(rhs.abs()));
    let mut report = CheckReport::single(meta, Outcome::new(lhs, rhs, tol));
    report.samples = Some(samples);
    report.stderr = Some(se);
    Ok(report.note("statistical: pass iff lhs - rhs <= 3 stderr"))
}

fn gaussian_inputs<R: Rng + ?Sized>(r: &mut R, d1: usize, n: usize) -> Vec<HermitianMatrix> {
    (0..n).map(|_| sample_gue(r, d1).matrix).collect()
}

/// Monte Carlo `Var L(X) ≤ Σᵢ E‖D_{Xᵢ}L[X]‖₂²` for `n` independent GUE
/// inputs of size `d1` (standard Gaussians when `d1 = 1`).
#[allow(clippy::too_many_arguments)]
pub fn check_gaussian_poincare<E: Executor, L: MatrixEvaluator>(
    exec: &E,
    ev: &L,
    d1: usize,
    d2: usize,
    n: usize,
    samples: u64,
    mode: DerivativeMode,
    seed: u64,
) -> Result<CheckReport> {
    let meta = Meta::new("gaussian-poincare", d2, n, seed);
    monte_carlo(
        exec,
        meta,
        samples,
        (d2, 1, 2),
        |r, m| {
            let xs = gaussian_inputs(r, d1, n);
            let l = ev.eval(&xs)?;
            m.scalars[0] += l.square().normalized_trace();
            for i in 0..n {
                let (nrm, _) = derivative_norm(ev, &xs, i, mode)?;
                m.scalars[1] += nrm * nrm;
            }
            m.mats[0] = &m.mats[0] + &l;
            Ok(())
        },
        |m| Ok((m.mean(0) - m.mean_mat(0).square().normalized_trace(), m.mean(1))),
    )
}

fn psd_power(a: &HermitianMatrix, p: f64) -> Result<HermitianMatrix> {
    let d = a.dim();
    let s = a.spectral();
    let v = SpectralInterval::nonnegative().admit(&s.values, tol::spec(d))?;
    let w: Vec<f64> = v.iter().map(|x| libm::pow(*x, p)).collect();
    Ok(s.compose(&w))
}

fn xlogx_trace(a: &HermitianMatrix) -> Result<f64> {
    let d = a.dim();
    let v = SpectralInterval::nonnegative().admit(&a.eigenvalues(), tol::spec(d))?;
    Ok(v.iter().map(|&x| if x < 1e-14 { 0.0 } else { x * libm::log(x) }).sum::<f64>() / d as f64)
}

/// `d^{1−2/p}`
fn dimension_factor(d: usize, p: f64) -> f64 {
    libm::pow(d as f64, 1.0 - 2.0 / p)
}

/// Monte Carlo Φ-Sobolev inequality with `Φ(u) = u^{2/p}` for a PSD-valued
/// function of `n` standard Gaussians:
/// `H_Φ(f^p) ≤ (2−p) Σᵢ E‖∂ᵢf‖₂² d^{1−2/p} + tr E f² (1 − d^{1−2/p})`.
#[allow(clippy::too_many_arguments)]
pub fn check_gaussian_sobolev<E: Executor, L: MatrixEvaluator>(
    exec: &E,
    f: &L,
    p: f64,
    d: usize,
    n: usize,
    samples: u64,
    mode: DerivativeMode,
    seed: u64,
) -> Result<CheckReport> {
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::InvalidExponent(p));
    }
    let meta = Meta::new("gaussian-sobolev", d, n, seed).phi(alloc::format!("power:{}", 2.0 / p));
    let k = dimension_factor(d, p);
    monte_carlo(
        exec,
        meta,
        samples,
        (d, 1, 2),
        |r, m| {
            let xs = gaussian_inputs(r, 1, n);
            let v = f.eval(&xs)?;
            m.mats[0] = &m.mats[0] + &psd_power(&v, p)?;
            m.scalars[0] += psd_power(&v, 2.0)?.normalized_trace();
            for i in 0..n {
                let (nrm, _) = derivative_norm(f, &xs, i, mode)?;
                m.scalars[1] += nrm * nrm;
            }
            Ok(())
        },
        |m| {
            let ef2 = m.mean(0);
            let lhs = ef2 - psd_power(&m.mean_mat(0), 2.0 / p)?.normalized_trace();
            let rhs = (2.0 - p) * m.mean(1) * k + ef2 * (1.0 - k);
            Ok((lhs, rhs))
        },
    )
}

/// Monte Carlo `Ent(f²) ≤ 2 Σᵢ E‖∂ᵢf‖₂² + log(d) tr E f²`.
pub fn check_gaussian_logsobolev<E: Executor, L: MatrixEvaluator>(
    exec: &E,
    f: &L,
    d: usize,
    n: usize,
    samples: u64,
    mode: DerivativeMode,
    seed: u64,
) -> Result<CheckReport> {
    let meta = Meta::new("gaussian-logsobolev", d, n, seed);
    monte_carlo(
        exec,
        meta,
        samples,
        (d, 1, 2),
        |r, m| {
            let xs = gaussian_inputs(r, 1, n);
            let v = f.eval(&xs)?;
            let f2 = psd_power(&v, 2.0)?;
            m.scalars[0] += xlogx_trace(&f2)?;
            m.mats[0] = &m.mats[0] + &f2;
            for i in 0..n {
                let (nrm, _) = derivative_norm(f, &xs, i, mode)?;
                m.scalars[1] += nrm * nrm;
            }
            Ok(())
        },
        |m| {
            let ef2 = m.mean_mat(0);
            let lhs = m.mean(0) - xlogx_trace(&ef2)?;
            let rhs = 2.0 * m.mean(1) + libm::log(d as f64) * ef2.normalized_trace();
            Ok((lhs, rhs))
        },
    )
}

/// `Var Z = H_{x²}(Z)`; exposed for cross-checks.
pub fn variance_as_entropy(z: &DiscreteRandomMatrix) -> Result<f64> {
    phi_entropy(&PhiFunction::square(), z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use crate::frechet::FnMultivariate;
    use crate::scalar::StandardFunction;

    fn s(x: f64) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(&[x])
    }

    fn rad_model<F: Fn(f64, f64) -> f64>(f: F) -> ProductModel {
        let sg = |l: usize| if l == 0 { -1.0 } else { 1.0 };
        ProductModel::from_fn(vec![vec![0.5, 0.5], vec![0.5, 0.5]], |x| s(f(sg(x[0]), sg(x[1])))).unwrap()
    }

    #[test]
    fn efron_stein_examples() {
        assert_eq!(efron_stein_quantity(&rad_model(|_, _| 3.0)).unwrap(), 0.0);
        let add = rad_model(|a, b| a + b);
        assert!((efron_stein_quantity(&add).unwrap() - 2.0).abs() < 1e-14);
        let r = check_efron_stein(&add, 0).unwrap();
        assert!(r.pass && r.max_gap.abs() < 1e-14);
        let prod = rad_model(|a, b| a * b);
        assert!((efron_stein_quantity(&prod).unwrap() - 2.0).abs() < 1e-14);
        assert!((variance(&prod.law()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn efron_stein_random_forms_agree() {
        for t in 0..50 {
            let mut r = keyed(1, "es-test", t);
            let m = crate::instances::product_model(&mut r, 2, 3, 2, crate::instances::Values::Hermitian).unwrap();
            let es = efron_stein_forms(&m);
            assert!(es.max_deviation() < 1e-10 * (1.0 + es.resample));
            let v = variance(&m.law());
            assert!((v - variance_as_entropy(&m.law()).unwrap()).abs() < 1e-12 * (1.0 + v));
            assert!(v <= es.resample + tol::entropy(es.resample));
        }
    }

    #[test]
    fn plus_identities() {
        let c = DiscreteRandomMatrix::constant(HermitianMatrix::identity(2));
        assert_eq!(plus_identity_deviation(&c, 2).unwrap().0, 0.0);
        let rad = DiscreteRandomMatrix::uniform(vec![s(-1.0), s(1.0)]).unwrap();
        assert!(plus_identity_deviation(&rad, 2).unwrap().0 < 1e-15);
        let mut r = keyed(2, "plus-test", 0);
        let z = DiscreteRandomMatrix::hermitian(vec![(0.3, rng::hermitian(&mut r, 3)), (0.7, rng::hermitian(&mut r, 3))]).unwrap();
        for q in 1..=3 {
            assert!(check_plus_identities(&z, q, 0).unwrap().pass);
        }
    }

    fn unit_law(points: &[HermitianMatrix]) -> Vec<(f64, HermitianMatrix)> {
        let p = 1.0 / points.len() as f64;
        points.iter().map(|m| (p, m.clone())).collect()
    }

    #[test]
    fn poincare_examples() {
        let id = SpectralSum { f: StandardFunction::Affine { a: 1.0, b: 0.0 }, weights: vec![1.0] };
        let mut r = keyed(3, "poincare-test", 0);
        let law = unit_law(&[rng::unit_interval(&mut r, 2), rng::unit_interval(&mut r, 2), rng::unit_interval(&mut r, 2)]);
        let m = MatrixInputModel::new(vec![law.clone()], id).unwrap();
        let (var, bound, _) = poincare_sides(&m, DerivativeMode::Analytic).unwrap();
        assert!((bound - 1.0).abs() < 1e-12 && var <= 1.0);
        let (_, fd_bound, used) = poincare_sides(&m, DerivativeMode::FiniteDifference).unwrap();
        assert_eq!(used, DerivativeMode::FiniteDifference);
        assert!((fd_bound - 1.0).abs() < 1e-8);

        let zero_one = unit_law(&[s(0.0), s(1.0)]);
        let sum = MatrixInputModel::new(vec![zero_one.clone(); 3], SpectralSum { f: StandardFunction::Affine { a: 1.0, b: 0.0 }, weights: vec![1.0; 3] }).unwrap();
        let (var, bound, _) = poincare_sides(&sum, DerivativeMode::Analytic).unwrap();
        assert!((var - 0.75).abs() < 1e-14 && (bound - 3.0).abs() < 1e-12);
        assert!(check_poincare(&sum, PoincareOptions::default(), 0).unwrap().pass);

        let konst = MatrixInputModel::new(vec![law], FnEvaluator(|_: &[HermitianMatrix]| Ok(HermitianMatrix::identity(2)))).unwrap();
        let r = check_poincare(&konst, PoincareOptions { mode: DerivativeMode::FiniteDifference, ..Default::default() }, 0).unwrap();
        assert!(r.pass && r.worst_lhs.abs() < 1e-14 && r.worst_rhs.abs() < 1e-14);
    }

    #[test]
    fn spot_check_catches_concave() {
        let sqrt = SpectralSum { f: StandardFunction::Power(0.5), weights: vec![-1.0] };
        let m = MatrixInputModel::new(vec![unit_law(&[s(0.2), s(0.8)])], sqrt).unwrap();
        assert!(spot_check_separate_convexity(&m, 50, 0).is_ok());
        let conc = SpectralSum { f: StandardFunction::Power(0.5), weights: vec![1.0] };
        let m = MatrixInputModel::new(vec![unit_law(&[s(0.2), s(0.8)])], conc).unwrap();
        assert!(matches!(spot_check_separate_convexity(&m, 50, 0), Err(Error::SeparateConvexityViolated { coordinate: 0, .. })));
    }

    #[test]
    fn commuting_examples() {
        let zero_one = unit_law(&[s(0.0), s(1.0)]);
        let r = check_poincare_commuting(vec![zero_one.clone(), zero_one.clone()], FnMultivariate::sum(2), 0).unwrap();
        assert!(r.pass && (r.worst_rhs - 2.0).abs() < 1e-12);
        for t in 0..20 {
            let mut g = keyed(4, "commuting-test", t);
            let diag = |g: &mut CheckRng| HermitianMatrix::from_real_diagonal(&[rng::uniform(g), rng::uniform(g)]);
            let laws = (0..2).map(|_| unit_law(&[diag(&mut g), diag(&mut g)])).collect();
            assert!(check_poincare_commuting(laws, FnMultivariate::sum_of_squares(2), t).unwrap().pass);
        }
        let a = HermitianMatrix::from_real_diagonal(&[0.2, 0.7]);
        let mut b = a.matrix().clone();
        b[(0, 1)] = C64::new(0.1, 0.0);
        b[(1, 0)] = C64::new(0.1, 0.0);
        let b = HermitianMatrix::from_matrix(b).unwrap();
        let e = check_poincare_commuting(vec![unit_law(&[a]), unit_law(&[b])], FnMultivariate::sum(2), 0);
        assert!(matches!(e, Err(Error::NotCommuting { .. })));
    }

    #[test]
    fn lipschitz_examples() {
        let zero_one = unit_law(&[s(0.0), s(1.0)]);
        let x1 = lipschitz_report(vec![zero_one.clone()], FnMultivariate { arity: 1, f: |x| x[0], grad: |_, _| 1.0 }, 16).unwrap();
        assert!((x1.lipschitz_const - 1.0).abs() < 1e-12 && (x1.ratio - 0.25).abs() < 1e-12);
        let c = lipschitz_report(vec![zero_one.clone()], FnMultivariate { arity: 1, f: |_| 2.0, grad: |_, _| 0.0 }, 16).unwrap();
        assert_eq!(c.ratio, 0.0);
        let absd = FnMultivariate { arity: 2, f: |x| (x[0] - x[1]).abs(), grad: |i, x| if i == 0 { (x[0] - x[1]).signum() } else { -(x[0] - x[1]).signum() } };
        let r = lipschitz_report(vec![zero_one.clone(), zero_one], absd, 16).unwrap();
        assert!(r.ratio.is_finite() && (r.lipschitz_const - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gue_samplers() {
        let mut r = keyed(5, "gue-test", 0);
        let g = sample_gue(&mut r, 3);
        assert_eq!(g.matrix.max_abs_diff(&HermitianMatrix::from_matrix_unchecked(g.matrix.matrix().adjoint())), 0.0);
        // m = 1: entries in {0, ±1} ∪ {±½ ± ½i}-type lattice
        let s1 = gue_clt_sample(&mut r, 3, 1);
        for k in 0..3 {
            for l in 0..3 {
                let z = s1.get(k, l);
                assert!((2.0 * z.re).fract() == 0.0 && (2.0 * z.im).fract() == 0.0);
            }
        }
        let n = 10_000;
        let v: f64 = (0..n).map(|_| gue_clt_sample(&mut r, 1, 64).get(0, 0).re.powi(2)).sum::<f64>() / n as f64;
        assert!((0.95..=1.05).contains(&v), "{v}");
    }

    #[test]
    fn gaussian_poincare_scalar() {
        let sum = SpectralSum { f: StandardFunction::Affine { a: 1.0, b: 0.0 }, weights: vec![1.0; 3] };
        let r = check_gaussian_poincare(&Serial, &sum, 1, 1, 3, 20_000, DerivativeMode::Analytic, 1).unwrap();
        assert!(r.pass && (r.worst_lhs - 3.0).abs() < 0.1 && (r.worst_rhs - 3.0).abs() < 1e-12, "{r:?}");
        let sq = SpectralSum { f: StandardFunction::Power(2.0), weights: vec![1.0] };
        let r = check_gaussian_poincare(&Serial, &sq, 1, 1, 1, 20_000, DerivativeMode::FiniteDifference, 1).unwrap();
        assert!(r.pass && (r.worst_lhs - 2.0).abs() < 0.15 && (r.worst_rhs - 4.0).abs() < 0.2, "{r:?}");
    }

    #[test]
    fn gaussian_logsobolev_equality_family() {
        // f = exp(λx/2): Ent(f²) = 2E f'² exactly; both sides (λ²/2)e^{λ²/2}
        let lam = 0.5;
        let f = FnEvaluator(move |x: &[HermitianMatrix]| Ok(s(libm::exp(lam * x[0].get(0, 0).re / 2.0))));
        let r = check_gaussian_logsobolev(&Serial, &f, 1, 1, 20_000, DerivativeMode::FiniteDifference, 2).unwrap();
        let want = lam * lam / 2.0 * libm::exp(lam * lam / 2.0);
        assert!(r.pass, "{r:?}");
        assert!((r.worst_rhs - want).abs() < 0.05 * want && (r.worst_lhs - want).abs() < 0.05 * want);
    }

    #[test]
    fn gaussian_sobolev_constant_and_matrix() {
        let m = HermitianMatrix::from_real_diagonal(&[1.0, 0.3]);
        let konst = FnEvaluator(move |_: &[HermitianMatrix]| Ok(m.clone()));
        let r = check_gaussian_sobolev(&Serial, &konst, 1.5, 2, 1, 100, DerivativeMode::FiniteDifference, 0).unwrap();
        assert!(r.pass && r.worst_lhs.abs() < 1e-12 && r.worst_rhs > 0.0);
        let m = HermitianMatrix::from_real_diagonal(&[1.0, 0.3]);
        let f = FnEvaluator(move |x: &[HermitianMatrix]| Ok(m.scale(libm::exp(x[0].get(0, 0).re / 4.0))));
        let r = check_gaussian_sobolev(&Serial, &f, 1.5, 2, 1, 20_000, DerivativeMode::FiniteDifference, 0).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
