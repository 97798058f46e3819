//! Sampling falsifiers for the equivalent characterizations (a)–(j) of the
//! matrix Φ-entropy class.
//!
//! Every check is a pure function of `(phi, d, trials, seed)`; a passing
//! report certifies "no violation in N trials", nothing more.

use alloc::vec::Vec;

use crate::entropy::{
    bregman_a, bregman_b, bregman_c, conditional_phi_entropy, duality_lower_bound, phi_entropy, subadditivity_outcome,
    trace_phi, DiscreteRandomMatrix, ProductModel,
};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::frechet::{fd, frechet_second, inverse_superoperator_of_derivative, Superoperator};
use crate::instances::{self, Values};
use crate::linalg::HermitianMatrix;
use crate::phi::PhiFunction;
use crate::report::{sweep, CheckReport, Meta, Outcome};
use crate::rng::{self, CheckRng};
use crate::scalar::ScalarFunction;
use crate::tol;

/// One midpoint-type convexity probe: `map(t·p₁ + (1−t)·p₂) ≤ t·map(p₁) + (1−t)·map(p₂)`.
pub fn joint_convexity_outcome<M>(map: M, p1: (&HermitianMatrix, &HermitianMatrix), p2: (&HermitianMatrix, &HermitianMatrix), t: f64) -> Result<Outcome>
where
    M: Fn(&HermitianMatrix, &HermitianMatrix) -> Result<f64>,
{
    let m1 = map(p1.0, p1.1)?;
    let m2 = map(p2.0, p2.1)?;
    let mid = map(&p1.0.lerp(p2.0, t), &p1.1.lerp(p2.1, t))?;
    let rhs = t * m1 + (1.0 - t) * m2;
    let scale = m1.abs().max(m2.abs()).max(mid.abs());
    Ok(Outcome::new(mid, rhs, tol::conv(scale))
        .with_witness("u1", p1.0)
        .with_witness("v1", p1.1)
        .with_witness("u2", p2.0)
        .with_witness("v2", p2.1))
}

/// Sweeps [`joint_convexity_outcome`] over sampled pairs; even trials use
/// `t = ½`, odd trials a uniform `t`.
pub fn check_joint_convexity<E, M, S>(exec: &E, meta: Meta, trials: u64, map: M, sampler: S) -> Result<CheckReport>
where
    E: Executor,
    M: Fn(&HermitianMatrix, &HermitianMatrix) -> Result<f64> + Sync + Send,
    S: Fn(&mut CheckRng) -> (HermitianMatrix, HermitianMatrix) + Sync + Send,
{
    sweep(exec, meta, trials, |t, r| {
        let (u1, v1) = sampler(r);
        let (u2, v2) = sampler(r);
        let s = if t % 2 == 0 { 0.5 } else { rng::uniform(r) };
        joint_convexity_outcome(&map, (&u1, &v1), (&u2, &v2), s)
    })
}

fn meta(name: &str, phi: &PhiFunction, d: usize, seed: u64) -> Meta {
    Meta::new(name, d, 0, seed).phi(phi.descriptor())
}

fn psd_pair(d: usize) -> impl Fn(&mut CheckRng) -> (HermitianMatrix, HermitianMatrix) + Sync + Send {
    move |r| (rng::psd(r, d), rng::psd(r, d))
}

/// (b): joint convexity of the matrix Brègman divergence `A_Φ`.
pub fn check_char_b<E: Executor>(exec: &E, phi: &PhiFunction, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let phi = *phi;
    check_joint_convexity(exec, meta("char-b", &phi, d, seed), trials, move |u, v| bregman_a(&phi, u, v), psd_pair(d))
}

/// (c): joint convexity of `B_Φ`.
pub fn check_char_c<E: Executor>(exec: &E, phi: &PhiFunction, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let phi = *phi;
    check_joint_convexity(exec, meta("char-c", &phi, d, seed), trials, move |u, v| bregman_b(&phi, u, v), psd_pair(d))
}

/// (d): joint convexity of `C_Φ(u, v) = Tr D²Φ[u](v, v)`, `v` Hermitian.
pub fn check_char_d<E: Executor>(exec: &E, phi: &PhiFunction, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let phi = *phi;
    check_joint_convexity(
        exec,
        meta("char-d", &phi, d, seed),
        trials,
        move |u, v| bregman_c(&phi, u, v),
        move |r: &mut CheckRng| (rng::psd(r, d), rng::hermitian(r, d)),
    )
}

/// (f): joint convexity of `(A, B) ↦ Tr[sΦ(A) + (1−s)Φ(B) − Φ(sA + (1−s)B)]`,
/// with `s` drawn per trial.
pub fn check_char_f<E: Executor>(exec: &E, phi: &PhiFunction, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let phi = *phi;
    let df = d as f64;
    sweep(exec, meta("char-f", &phi, d, seed), trials, move |t, r| {
        let s = rng::uniform(r);
        let map = |a: &HermitianMatrix, b: &HermitianMatrix| -> Result<f64> {
            Ok(df * (s * trace_phi(&phi, a)? + (1.0 - s) * trace_phi(&phi, b)? - trace_phi(&phi, &a.lerp(b, s))?))
        };
        let (u1, v1) = (rng::psd(r, d), rng::psd(r, d));
        let (u2, v2) = (rng::psd(r, d), rng::psd(r, d));
        let w = if t % 2 == 0 { 0.5 } else { rng::uniform(r) };
        joint_convexity_outcome(map, (&u1, &v1), (&u2, &v2), w)
    })
}

/// `(DΨ[X])⁻¹` as a superoperator.
pub fn inverse_derivative_superoperator(phi: &PhiFunction, x: &HermitianMatrix) -> Result<Superoperator> {
    inverse_superoperator_of_derivative(&phi.psi(), x)
}

/// (a) at one pair: midpoint concavity of `X ↦ (DΨ[X])⁻¹` in the Löwner
/// order of d²×d² Hermitian matrices.
pub fn char_a_outcome(phi: &PhiFunction, a: &HermitianMatrix, b: &HermitianMatrix) -> Result<Outcome> {
    let ma = inverse_derivative_superoperator(phi, a)?.to_hermitian()?;
    let mb = inverse_derivative_superoperator(phi, b)?.to_hermitian()?;
    let mm = inverse_derivative_superoperator(phi, &a.lerp(b, 0.5))?.to_hermitian()?;
    let avg = ma.lerp(&mb, 0.5);
    let scale = ma.operator_norm().max(mb.operator_norm());
    // concavity: avg ⪯ mm, i.e. λ_min(mm − avg) ≥ 0
    let lam = (&mm - &avg).min_eigenvalue();
    Ok(Outcome::new(-lam, 0.0, tol::conv(scale)).with_witness("A", a).with_witness("B", b))
}

pub fn check_char_a<E: Executor>(exec: &E, phi: &PhiFunction, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    if phi.is_affine() {
        return Err(Error::InvalidPhi("characterization (a) needs a non-affine Φ".into()));
    }
    let phi = *phi;
    sweep(exec, meta("char-a", &phi, d, seed), trials, move |_, r| {
        let a = rng::psd(r, d);
        let b = rng::psd(r, d);
        char_a_outcome(&phi, &a, &b)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharE {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// (e): with `T = DΨ[A]` and `g = T⁻¹h`,
/// `lhs = Tr[g · D³Ψ[A](k, k, g)]` and `rhs = 2 Tr[g · D²Ψ[A](k, T⁻¹ D²Ψ[A](k, g))]`.
/// The third derivative is a central difference of `D²Ψ` along `k`.
pub fn check_char_e(phi: &PhiFunction, a: &HermitianMatrix, h: &HermitianMatrix, k: &HermitianMatrix) -> Result<CharE> {
    if phi.is_affine() {
        return Err(Error::InvalidPhi("characterization (e) needs a non-affine Φ".into()));
    }
    let psi = phi.psi();
    let tinv = inverse_superoperator_of_derivative(&psi, a)?;
    let g = tinv.apply_hermitian(h);
    let lower = psi.domain(2).lo;
    let step = fd::step(a, k, 1e-4, lower);
    let d3 = fd::first(|s| frechet_second(&psi, &(a + &k.scale(s)), k, &g), step)?;
    let lhs = g.inner(&d3);
    let q = frechet_second(&psi, a, k, &g)?;
    let w = tinv.apply_hermitian(&q);
    let rhs = 2.0 * g.inner(&frechet_second(&psi, a, k, &w)?);
    let holds = lhs >= rhs - tol::conv(lhs.abs().max(rhs.abs()));
    Ok(CharE { lhs, rhs, holds })
}

pub fn check_char_e_sweep<E: Executor>(exec: &E, phi: &PhiFunction, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let phi = *phi;
    sweep(exec, meta("char-e", &phi, d, seed), trials, move |_, r| {
        let a = rng::psd(r, d);
        let h = rng::hermitian(r, d);
        let k = rng::hermitian(r, d);
        let e = check_char_e(&phi, &a, &h, &k)?;
        // claim: rhs ≤ lhs
        Ok(Outcome::new(e.rhs, e.lhs, tol::conv(e.lhs.abs().max(e.rhs.abs())))
            .with_witness("A", &a)
            .with_witness("h", &h)
            .with_witness("k", &k))
    })
}

/// (g) on a two-input model: `E₁ H_Φ(Z | X₁) ≥ H_Φ(E₁ Z)`, where the
/// entropies on both sides are taken over `X₂`.
pub fn char_g_outcome<F: ScalarFunction + ?Sized>(phi: &F, model: &ProductModel) -> Result<Outcome> {
    if model.n() != 2 {
        return Err(Error::InvalidArgument(alloc::format!("characterization (g) needs two inputs, got {}", model.n())));
    }
    let lhs: f64 = conditional_phi_entropy(phi, model, 1)?.iter().map(|(p, h)| p * h).sum();
    let support: Vec<(f64, HermitianMatrix)> = model.slices(0).map(|idx| (model.prob_without(idx, 0), model.conditional_mean(idx, 0))).collect();
    let rhs = phi_entropy(phi, &DiscreteRandomMatrix::hermitian(support)?)?;
    Ok(Outcome::new(rhs, lhs, tol::entropy(lhs.abs().max(rhs.abs()))))
}

pub fn check_char_g<E: Executor>(exec: &E, phi: &PhiFunction, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let phi = *phi;
    sweep(exec, meta("char-g", &phi, d, seed), trials, move |_, r| {
        let model = instances::product_model(r, d, 2, 3, Values::Psd)?;
        char_g_outcome(&phi, &model)
    })
}

/// (h): `H_Φ(tZ₁ + (1−t)Z₂) ≤ t H_Φ(Z₁) + (1−t) H_Φ(Z₂)` on a shared index.
pub fn check_char_h<F: ScalarFunction + ?Sized>(phi: &F, z1: &DiscreteRandomMatrix, z2: &DiscreteRandomMatrix, t: f64) -> Result<Outcome> {
    let mid = phi_entropy(phi, &z1.lerp(z2, t)?)?;
    let rhs = t * phi_entropy(phi, z1)? + (1.0 - t) * phi_entropy(phi, z2)?;
    Ok(Outcome::new(mid, rhs, tol::entropy(rhs.abs().max(mid.abs()))))
}

pub fn check_char_h_sweep<E: Executor>(exec: &E, phi: &PhiFunction, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let phi = *phi;
    sweep(exec, meta("char-h", &phi, d, seed), trials, move |t, r| {
        let (z1, z2) = instances::coupled_pair(r, d, 3)?;
        let s = if t % 2 == 0 { 0.5 } else { rng::uniform(r) };
        check_char_h(&phi, &z1, &z2, s)
    })
}

/// (i): the variational lower bound never exceeds `H_Φ(Z)`.
pub fn char_i_outcome<F: ScalarFunction + ?Sized>(phi: &F, z: &DiscreteRandomMatrix, t: &DiscreteRandomMatrix) -> Result<Outcome> {
    let h = phi_entropy(phi, z)?;
    let lb = duality_lower_bound(phi, z, t)?;
    Ok(Outcome::new(lb, h, tol::entropy(h.abs().max(lb.abs()))))
}

pub fn check_char_i<E: Executor>(exec: &E, phi: &PhiFunction, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let phi = *phi;
    sweep(exec, meta("char-i", &phi, d, seed), trials, move |_, r| {
        let (z, t) = instances::coupled_pair(r, d, 3)?;
        char_i_outcome(&phi, &z, &t)
    })
}

/// (j): subadditivity on random three-input models.
pub fn check_char_j<E: Executor>(exec: &E, phi: &PhiFunction, d: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    let phi = *phi;
    sweep(exec, meta("char-j", &phi, d, seed), trials, move |_, r| {
        let model = instances::product_model(r, d, 3, 2, Values::Psd)?;
        subadditivity_outcome(&phi, &model)
    })
}

/// Runs every characterization for one Φ. Out-of-class Φ (the cube
/// control) only gets (a), (d) and (e), which is where it must fail.
pub fn run_all<E: Executor>(exec: &E, phi: &PhiFunction, d: usize, trials: u64, seed: u64) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    let affine = phi.is_affine();
    if !affine {
        out.push(check_char_a(exec, phi, d, trials, seed)?);
    }
    if phi.in_class() {
        out.push(check_char_b(exec, phi, d, trials, seed)?);
        out.push(check_char_c(exec, phi, d, trials, seed)?);
    }
    out.push(check_char_d(exec, phi, d, trials, seed)?);
    if !affine {
        out.push(check_char_e_sweep(exec, phi, d, trials, seed)?);
    }
    if phi.in_class() {
        out.push(check_char_f(exec, phi, d, trials, seed)?);
        out.push(check_char_g(exec, phi, d, trials, seed)?);
        out.push(check_char_h_sweep(exec, phi, d, trials, seed)?);
        out.push(check_char_i(exec, phi, d, trials, seed)?);
        out.push(check_char_j(exec, phi, d, trials, seed)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;

    fn s(x: f64) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(&[x])
    }

    #[test]
    fn char_e_scalar_values() {
        let e = check_char_e(&PhiFunction::square(), &s(1.3), &s(0.7), &s(-0.4)).unwrap();
        assert!(e.lhs.abs() < 1e-9 && e.rhs.abs() < 1e-12 && e.holds);

        // x log x: both sides 2h²k²/a
        let (a, h, k) = (0.8, 0.6, -1.1);
        let e = check_char_e(&PhiFunction::xlogx(), &s(a), &s(h), &s(k)).unwrap();
        let want = 2.0 * h * h * k * k / a;
        assert!((e.lhs - want).abs() < 1e-7 * want, "{e:?} vs {want}");
        assert!((e.rhs - want).abs() < 1e-12 * want);
        assert!(e.holds);

        // x^1.5 at a=1, h=k=1: lhs = Φ''''/Φ''² = 1, rhs = 2Φ'''²/Φ''³ = 2/3
        let e = check_char_e(&PhiFunction::power(1.5).unwrap(), &s(1.0), &s(1.0), &s(1.0)).unwrap();
        assert!((e.lhs - 1.0).abs() < 1e-7, "{e:?}");
        assert!((e.rhs - 2.0 / 3.0).abs() < 1e-12);
        assert!(e.holds);

        // x³: Φ'''' = 0 while Φ''' ≠ 0
        let e = check_char_e(&PhiFunction::cube(), &s(1.0), &s(1.0), &s(1.0)).unwrap();
        assert!(!e.holds);
    }

    #[test]
    fn square_superoperator_inverse_is_half_identity() {
        let a = HermitianMatrix::from_real_diagonal(&[0.3, 2.0]);
        let m = inverse_derivative_superoperator(&PhiFunction::square(), &a).unwrap();
        assert!(m.distance(&Superoperator::scaled_identity(2, 0.5)) < 1e-12);
        let o = char_a_outcome(&PhiFunction::square(), &a, &HermitianMatrix::identity(2)).unwrap();
        assert!(o.gap().abs() < 1e-12);
    }

    #[test]
    fn cube_fails_a_and_d_in_one_dimension() {
        let ra = check_char_a(&Serial, &PhiFunction::cube(), 1, 200, 5).unwrap();
        assert!(!ra.pass && !ra.violations.is_empty());
        let rd = check_char_d(&Serial, &PhiFunction::cube(), 1, 2000, 5).unwrap();
        assert!(!rd.pass, "{}", rd.summary());
    }

    #[test]
    fn in_class_small_sweeps_pass() {
        for phi in [PhiFunction::xlogx(), PhiFunction::power(1.5).unwrap()] {
            for r in run_all(&Serial, &phi, 2, 30, 11).unwrap() {
                assert!(r.pass, "{} {:?}", r.summary(), r.violations.first());
            }
        }
    }

    #[test]
    fn g_degenerate_models() {
        let rad = alloc::vec![0.5, 0.5];
        let only2 = ProductModel::from_fn(alloc::vec![rad.clone(), rad.clone()], |x| s(1.0 + x[1] as f64)).unwrap();
        let o = char_g_outcome(&PhiFunction::xlogx(), &only2).unwrap();
        let h = phi_entropy(&PhiFunction::xlogx(), &only2.law()).unwrap();
        assert!((o.lhs - h).abs() < 1e-14 && (o.rhs - h).abs() < 1e-14);
        let only1 = ProductModel::from_fn(alloc::vec![rad.clone(), rad], |x| s(1.0 + x[0] as f64)).unwrap();
        let o = char_g_outcome(&PhiFunction::xlogx(), &only1).unwrap();
        assert_eq!((o.lhs, o.rhs), (0.0, 0.0));
    }

    #[test]
    fn h_endpoints_and_diagonal() {
        let mut r = rng::keyed(3, "h-test", 0);
        let (z1, z2) = instances::coupled_pair(&mut r, 2, 3).unwrap();
        let phi = PhiFunction::power(1.5).unwrap();
        for t in [0.0, 1.0] {
            assert!(check_char_h(&phi, &z1, &z2, t).unwrap().gap().abs() < 1e-14);
        }
        assert!(check_char_h(&phi, &z1, &z1, 0.3).unwrap().gap().abs() < 1e-12);
    }
}
