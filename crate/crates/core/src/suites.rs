//! Seeded sweeps over random instances, one [`CheckReport`] per check.
//!
//! Each sweep draws trial `t` from `keyed(seed, check, t)`, so a report
//! depends only on its arguments and never on the executor. Where a sweep
//! takes `n`, trial `t` uses `1 + t mod n` inputs (or none when `n = 0`).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::boolean::{
    bonami_beckner_sides, dirichlet_flips, dirichlet_spectral, fourier_transform, log_sobolev_sides, p_variance_limit,
    parseval_deviation, phi_sobolev_sides, random_hermitian_function, random_psd_function,
};
use crate::concentration::{
    check_gaussian_logsobolev, check_gaussian_poincare, check_gaussian_sobolev, efron_stein_forms, efron_stein_quantity,
    plus_identity_deviation, poincare_sides, variance, Commuting, DerivativeMode, FnEvaluator, MatrixInputModel, SpectralSum,
};
use crate::entropy::{duality_lower_bound, phi_entropy, subadditivity_outcome, DiscreteRandomMatrix};
use crate::error::Result;
use crate::exec::Executor;
use crate::frechet::{fd, frechet_derivative, frechet_second, FnMultivariate};
use crate::holevo::{
    classical_sdpi_ratio, eta_phi, holevo_chi, nu_of, random_kernel, CQEnsemble, EtaOptions, MarkovKernel,
};
use crate::instances::{self, Values};
use crate::linalg::HermitianMatrix;
use crate::phi::PhiFunction;
use crate::report::{sweep, CheckReport, Meta, Outcome};
use crate::rng::{self, keyed};
use crate::scalar::{ScalarFunction, StandardFunction};
use crate::tol;

/// Number of inputs used by trial `t` for a sweep with size parameter `n`.
pub fn arity(n: usize, t: u64) -> usize {
    if n == 0 {
        0
    } else {
        1 + (t % n as u64) as usize
    }
}

/// Identity tolerance used by the exact-identity sweeps.
pub fn identity_tol(scale: f64) -> f64 {
    1e-10 * (1.0 + scale.abs())
}

// ---- exact identities -------------------------------------------------------

pub fn parseval<E: Executor>(exec: &E, d: usize, n: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    sweep(exec, Meta::new("parseval", d, n, seed), trials, move |t, r| {
        let f = random_hermitian_function(r, arity(n, t), d);
        let (dev, scale) = parseval_deviation(&f);
        Ok(Outcome::identity(dev, identity_tol(scale)))
    })
}

/// Spectral, flip and Efron–Stein forms of the Dirichlet energy agree.
pub fn dirichlet<E: Executor>(exec: &E, d: usize, n: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    sweep(exec, Meta::new("dirichlet", d, n, seed), trials, move |t, r| {
        let f = random_hermitian_function(r, arity(n, t), d);
        let spectral = dirichlet_spectral(&fourier_transform(&f));
        let flips = dirichlet_flips(&f);
        let es = efron_stein_forms(&f.product_model()?).resample;
        let dev = (spectral - flips).abs().max((spectral - es).abs());
        Ok(Outcome::identity(dev, identity_tol(spectral)))
    })
}

pub fn law_total_variance<E: Executor>(exec: &E, phi: &PhiFunction, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    crate::holevo::check_law_total_variance_sweep(exec, phi, d, trials, seed)
}

/// The resampling, conditional-variance and positive-part forms of the
/// Efron–Stein quantity coincide.
pub fn efron_stein_form_equivalence<E: Executor>(exec: &E, d: usize, n: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    sweep(exec, Meta::new("efron-stein-forms", d, n, seed), trials, move |t, r| {
        let m = arity(n, t);
        let k = if m <= 4 { 2 + (t % 2) as usize } else { 2 };
        let model = instances::product_model(r, d, m, k, Values::Hermitian)?;
        let es = efron_stein_forms(&model);
        Ok(Outcome::identity(es.max_deviation(), identity_tol(es.resample)))
    })
}

pub fn plus_identities<E: Executor>(exec: &E, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    sweep(exec, Meta::new("plus-identities", d, 0, seed), trials, move |t, r| {
        let z = instances::random_matrix(r, d, 2 + (t % 3) as usize, Values::Hermitian)?;
        let (dev, scale) = plus_identity_deviation(&z, 1 + (t % 3) as u32)?;
        Ok(Outcome::identity(dev, identity_tol(scale)))
    })
}

// ---- inequalities -----------------------------------------------------------

pub fn subadditivity<E: Executor>(exec: &E, phi: &PhiFunction, d: usize, n: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let phi = *phi;
    sweep(exec, Meta::new("subadditivity", d, n, seed).phi(phi.descriptor()), trials, move |t, r| {
        let model = instances::product_model(r, d, arity(n, t), 2, Values::Psd)?;
        subadditivity_outcome(&phi, &model)
    })
}

pub fn efron_stein<E: Executor>(exec: &E, d: usize, n: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    sweep(exec, Meta::new("efron-stein", d, n, seed), trials, move |t, r| {
        let model = instances::product_model(r, d, arity(n, t), 2, Values::Hermitian)?;
        let var = variance(&model.law());
        let e = efron_stein_quantity(&model)?;
        Ok(Outcome::new(var, e, tol::conv(e)))
    })
}

fn unit_laws<R: Rng + ?Sized>(r: &mut R, d: usize, m: usize, diagonal: bool) -> Vec<Vec<(f64, HermitianMatrix)>> {
    (0..m)
        .map(|_| {
            let p = instances::law(r, 2);
            p.into_iter()
                .map(|p| {
                    let x = if diagonal {
                        let v: Vec<f64> = (0..d).map(|_| rng::uniform(r)).collect();
                        HermitianMatrix::from_real_diagonal(&v)
                    } else {
                        rng::unit_interval(r, d)
                    };
                    (p, x)
                })
                .collect()
        })
        .collect()
}

/// Poincaré bound for `L(X) = Σᵢ wᵢ f(Xᵢ)` with `f ∈ {x², x^{3/2}}`
/// operator convex and inputs in `[0, I]`.
pub fn poincare<E: Executor>(exec: &E, d: usize, n: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    sweep(exec, Meta::new("poincare", d, n, seed), trials, move |t, r| {
        let m = arity(n, t).max(1);
        let laws = unit_laws(r, d, m, false);
        let f = if t % 2 == 0 { StandardFunction::Power(2.0) } else { StandardFunction::Power(1.5) };
        let weights = (0..m).map(|_| rng::uniform(r)).collect();
        let model = MatrixInputModel::new(laws, SpectralSum { f, weights })?;
        let (var, bound, _) = poincare_sides(&model, DerivativeMode::Analytic)?;
        Ok(Outcome::new(var, bound, tol::conv(bound)))
    })
}

/// Poincaré bound for `Σᵢ Xᵢ²` on commuting (diagonal) inputs in `[0, I]`.
pub fn poincare_commuting<E: Executor>(exec: &E, d: usize, n: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    sweep(exec, Meta::new("poincare-commuting", d, n, seed), trials, move |t, r| {
        let m = arity(n, t).max(1);
        let laws = unit_laws(r, d, m, true);
        let model = MatrixInputModel::new(laws, Commuting(FnMultivariate::sum_of_squares(m)))?;
        let (var, bound, _) = poincare_sides(&model, DerivativeMode::Analytic)?;
        Ok(Outcome::new(var, bound, tol::conv(bound)))
    })
}

/// `p` uniform on `[1, 2]`, Hermitian-valued functions.
pub fn bonami_beckner<E: Executor>(exec: &E, d: usize, n: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    sweep(exec, Meta::new("bonami-beckner", d, n, seed), trials, move |t, r| {
        let p = 1.0 + rng::uniform(r);
        let f = random_hermitian_function(r, arity(n, t), d);
        let (lhs, rhs) = bonami_beckner_sides(&f, p)?;
        Ok(Outcome::new(lhs, rhs, tol::conv(rhs)))
    })
}

/// `p` uniform on `[1.05, 1.95]`, PSD-valued functions.
pub fn phi_sobolev<E: Executor>(exec: &E, d: usize, n: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    sweep(exec, Meta::new("phi-sobolev", d, n, seed), trials, move |t, r| {
        let p = 1.05 + 0.9 * rng::uniform(r);
        let f = random_psd_function(r, arity(n, t), d);
        let (lhs, rhs) = phi_sobolev_sides(&f, p)?;
        Ok(Outcome::new(lhs, rhs, tol::conv(lhs.abs().max(rhs.abs()))))
    })
}

pub fn log_sobolev<E: Executor>(exec: &E, d: usize, n: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    sweep(exec, Meta::new("log-sobolev", d, n, seed), trials, move |t, r| {
        let f = random_psd_function(r, arity(n, t), d);
        let (lhs, rhs) = log_sobolev_sides(&f)?;
        Ok(Outcome::new(lhs, rhs, tol::conv(lhs.abs().max(rhs.abs()))))
    })
}

pub fn data_processing<E: Executor>(exec: &E, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    crate::holevo::check_data_processing_sweep(exec, d, trials, seed)
}

/// The variational lower bound never exceeds `H_Φ(Z)`.
pub fn duality<E: Executor>(exec: &E, phi: &PhiFunction, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let phi = *phi;
    sweep(exec, Meta::new("duality", d, 0, seed).phi(phi.descriptor()), trials, move |t, r| {
        let (z, w) = instances::coupled_pair(r, d, 2 + (t % 3) as usize)?;
        let h = phi_entropy(&phi, &z)?;
        let lower = duality_lower_bound(&phi, &z, &w)?;
        Ok(Outcome::new(lower, h, tol::conv(h)))
    })
}

// ---- Fréchet derivatives ----------------------------------------------------

const GRADIENT_FUNCTIONS: [StandardFunction; 3] = [StandardFunction::Power(2.0), StandardFunction::XLogX, StandardFunction::Power(1.5)];

/// `‖analytic − numeric‖₂ / max(‖numeric‖₂, 1e-8 ‖E‖₂)`.
fn relative_error(analytic: &HermitianMatrix, numeric: &HermitianMatrix, e: &HermitianMatrix) -> f64 {
    (analytic - numeric).frobenius_norm() / numeric.frobenius_norm().max(1e-8 * e.frobenius_norm())
}

/// Divided-difference first derivative against Richardson central
/// differences; `f` cycles through `x²`, `x log x`, `x^{3/2}`.
pub fn frechet_first<E: Executor>(exec: &E, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let report = sweep(exec, Meta::new("frechet-first", d, 0, seed), trials, move |t, r| {
        let f = GRADIENT_FUNCTIONS[(t % 3) as usize];
        let a = rng::psd(r, d);
        let e = rng::hermitian(r, d);
        let dk = frechet_derivative(&f, &a, &e)?;
        let h = fd::step(&a, &e, 1e-5, f.domain(0).lo);
        let num = fd::first(fd::along(&f, &a, &e), h)?;
        Ok(Outcome::new(relative_error(&dk, &num, &e), 0.0, 1e-6).with_witness("A", &a).with_witness("E", &e))
    })?;
    Ok(report.note("lhs is the relative error; f cycles x^2, xlogx, x^1.5"))
}

/// Second derivative `D²f(A)[E, E]` against central second differences.
pub fn frechet_second_order<E: Executor>(exec: &E, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let report = sweep(exec, Meta::new("frechet-second", d, 0, seed), trials, move |t, r| {
        let f = GRADIENT_FUNCTIONS[(t % 3) as usize];
        let a = rng::psd(r, d);
        let e = rng::hermitian(r, d);
        let d2 = frechet_second(&f, &a, &e, &e)?;
        let h = fd::step_within(&a, &e, 1e-3, f.domain(0).lo, 0.3);
        let num = fd::second(fd::along(&f, &a, &e), h)?;
        Ok(Outcome::new(relative_error(&d2, &num, &e), 0.0, 1e-4).with_witness("A", &a).with_witness("E", &e))
    })?;
    Ok(report.note("lhs is the relative error; f cycles x^2, xlogx, x^1.5"))
}

// ---- p-variance -------------------------------------------------------------

/// Richardson limit of `Var_p/(2−p)` on random PD two-point laws, within
/// `1e-4` in `‖·‖₂`, with residuals shrinking linearly in `2 − p`.
pub fn p_variance<E: Executor>(exec: &E, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let name = "p-variance-limit";
    let results = exec.map(trials as usize, |t| -> Result<(Outcome, bool)> {
        let mut r = keyed(seed, name, t as u64);
        let w = 0.1 + 0.8 * rng::uniform(&mut r);
        let z = DiscreteRandomMatrix::new(vec![(w, rng::psd(&mut r, d)), (1.0 - w, rng::psd(&mut r, d))])?;
        let lim = p_variance_limit(&z)?;
        let linear = lim.shrinks_linearly();
        let o = Outcome::identity(lim.deviation, 1e-4).with_witness("Z1", &z.support()[0].1).with_witness("Z2", &z.support()[1].1);
        Ok((o, linear))
    });
    let mut report = CheckReport::new(Meta::new(name, d, 0, seed));
    let mut nonlinear = 0u64;
    for (t, res) in results.into_iter().enumerate() {
        let (o, linear) = res?;
        if !linear {
            nonlinear += 1;
        }
        report.absorb(t as u64, o);
    }
    if nonlinear > 0 {
        report.pass = false;
        report.notes.push(alloc::format!("{nonlinear} trials with residuals not shrinking linearly in 2 - p"));
    }
    Ok(report)
}

// ---- Gaussian Monte Carlo ---------------------------------------------------

/// `L(x) = x₁ + … + xₙ` on standard Gaussians: `Var = n = bound`.
pub fn gaussian_poincare<E: Executor>(exec: &E, n: usize, samples: u64, seed: u64) -> Result<CheckReport> {
    let n = n.max(1);
    let sum = SpectralSum { f: StandardFunction::Affine { a: 1.0, b: 0.0 }, weights: vec![1.0; n] };
    Ok(check_gaussian_poincare(exec, &sum, 1, 1, n, samples, DerivativeMode::Analytic, seed)?.note("L = x_1 + ... + x_n"))
}

/// A fixed PD matrix with spectrum in `[0.3, 1]`.
fn spread(d: usize) -> HermitianMatrix {
    let v: Vec<f64> = (0..d).map(|i| if d == 1 { 1.0 } else { 1.0 - 0.7 * i as f64 / (d - 1) as f64 }).collect();
    HermitianMatrix::from_real_diagonal(&v)
}

fn gaussian_scalar(xs: &[HermitianMatrix]) -> f64 {
    xs[0].get(0, 0).re
}

/// `f(x) = M e^{x/4}` with `p = 3/2`.
pub fn gaussian_sobolev<E: Executor>(exec: &E, d: usize, samples: u64, seed: u64) -> Result<CheckReport> {
    let m = spread(d);
    let f = FnEvaluator(move |xs: &[HermitianMatrix]| Ok(m.scale(libm::exp(gaussian_scalar(xs) / 4.0))));
    Ok(check_gaussian_sobolev(exec, &f, 1.5, d, 1, samples, DerivativeMode::FiniteDifference, seed)?.note("f = M exp(x/4), p = 1.5"))
}

/// `f(x) = M e^{x/4}`, the equality family for the scalar inequality.
pub fn gaussian_logsobolev<E: Executor>(exec: &E, d: usize, samples: u64, seed: u64) -> Result<CheckReport> {
    let m = spread(d);
    let f = FnEvaluator(move |xs: &[HermitianMatrix]| Ok(m.scale(libm::exp(gaussian_scalar(xs) / 4.0))));
    Ok(check_gaussian_logsobolev(exec, &f, d, 1, samples, DerivativeMode::FiniteDifference, seed)?.note("f = M exp(x/4)"))
}

// ---- Holevo quantities ------------------------------------------------------

/// Two orthogonal equiprobable pure qubit states carry `log 2`.
pub fn holevo_reference(seed: u64) -> Result<CheckReport> {
    let e0 = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
    let e1 = HermitianMatrix::from_real_diagonal(&[0.0, 1.0]);
    let chi = holevo_chi(&CQEnsemble::new(vec![0.5, 0.5], vec![e0, e1])?)?;
    let dev = (chi - core::f64::consts::LN_2).abs();
    Ok(CheckReport::single(Meta::new("holevo-reference", 2, 2, seed), Outcome::identity(dev, 1e-12)))
}

/// Search budget used by the η sweeps.
pub fn sweep_eta_options(d: usize, seed: u64) -> EtaOptions {
    EtaOptions { d, restarts: 4, steps: 60, seed, ..EtaOptions::default() }
}

/// `η̂(identity) = 1` and `η̂(constant) = 0`, exactly.
pub fn eta_reference<E: Executor>(exec: &E, d: usize, seed: u64) -> Result<CheckReport> {
    let mu = [0.4, 0.6];
    let opts = sweep_eta_options(d, seed);
    let id = eta_phi(exec, &mu, &MarkovKernel::identity(2), &opts)?.eta_hat;
    let flat = eta_phi(exec, &mu, &MarkovKernel::constant(2, vec![0.3, 0.7])?, &opts)?.eta_hat;
    let mut report = CheckReport::new(Meta::new("eta-reference", d, 2, seed));
    report.absorb(0, Outcome::identity((id - 1.0).abs(), 0.0));
    report.absorb(1, Outcome::identity(flat.abs(), 0.0));
    Ok(report.note("trial 0: identity kernel; trial 1: constant kernel"))
}

/// `η̂ ∈ [0, 1]` for random `(μ, K)`.
pub fn eta_range<E: Executor>(exec: &E, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    sweep(exec, Meta::new("eta-range", d, 0, seed), trials, move |t, r| {
        let nx = 2 + (t % 2) as usize;
        let mu = rng::simplex(r, nx, 0.05);
        let k = random_kernel(r, nx, 2);
        let eta = eta_phi(&crate::exec::Serial, &mu, &k, &sweep_eta_options(d, seed ^ t))?.eta_hat;
        // distance outside [0, 1]
        Ok(Outcome::identity((-eta).max(eta - 1.0).max(0.0), 0.0))
    })
}

/// At `d = 1` the grid estimate equals the classical KL contraction
/// maximised over the same scalar grid.
pub fn eta_classical<E: Executor>(exec: &E, trials: u64, seed: u64) -> Result<CheckReport> {
    sweep(exec, Meta::new("eta-classical", 1, 2, seed), trials, move |_, r| {
        let mu = rng::simplex(r, 2, 0.05);
        let k = random_kernel(r, 2, 2);
        let opts = EtaOptions { d: 1, restarts: 0, ..EtaOptions::default() };
        let eta = eta_phi(&crate::exec::Serial, &mu, &k, &opts)?.eta_hat;
        let steps = libm::round(1.0 / opts.resolution) as usize;
        let mut best: f64 = 0.0;
        for a in 1..=steps {
            for b in 1..=steps {
                let f = [a as f64 * opts.resolution, b as f64 * opts.resolution];
                let f = [HermitianMatrix::from_real_diagonal(&[f[0]]), HermitianMatrix::from_real_diagonal(&[f[1]])];
                if let Some(v) = classical_sdpi_ratio(&mu, &k, &nu_of(&mu, &f))? {
                    best = best.max(v);
                }
            }
        }
        Ok(Outcome::identity((eta - best.min(1.0)).abs(), 1e-6))
    })
}

/// Functional SDPI for a binary symmetric channel at `c = η̂ + 0.05`.
pub fn functional_sdpi<E: Executor>(exec: &E, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let mu = [0.5, 0.5];
    let bsc = MarkovKernel::binary_symmetric(0.1)?;
    let eta = eta_phi(exec, &mu, &bsc, &EtaOptions { d: d.max(2), restarts: 10, steps: 200, seed, ..EtaOptions::default() })?;
    let c = (eta.eta_hat + 0.05).min(0.999);
    let mut report = crate::holevo::check_functional_sdpi_sweep(exec, &mu, &bsc, c, d, trials, seed)?;
    report.notes.push(String::from("kernel: binary symmetric, crossover 0.1"));
    Ok(report)
}
