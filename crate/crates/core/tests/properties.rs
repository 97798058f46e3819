use matphi_core::boolean::{parseval_deviation, random_hermitian_function};
use matphi_core::concentration::{variance, variance_as_entropy};
use matphi_core::entropy::{phi_entropy, DiscreteRandomMatrix};
use matphi_core::exec::Serial;
use matphi_core::frechet::frechet_derivative;
use matphi_core::rng::{self, keyed};
use matphi_core::suites;
use matphi_core::PhiFunction;
use proptest::prelude::*;

fn law(seed: u64, d: usize, k: usize) -> DiscreteRandomMatrix {
    let mut r = keyed(seed, "properties", 0);
    let w = rng::simplex(&mut r, k, 0.01);
    DiscreteRandomMatrix::new(w.into_iter().map(|p| (p, rng::psd(&mut r, d))).collect()).unwrap()
}

fn phis() -> [PhiFunction; 4] {
    [PhiFunction::power(1.2).unwrap(), PhiFunction::power(1.5).unwrap(), PhiFunction::square(), PhiFunction::xlogx()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropies_are_nonnegative(seed in any::<u64>(), d in 1usize..4, k in 1usize..5) {
        let z = law(seed, d, k);
        for phi in phis() {
            let h = phi_entropy(&phi, &z).unwrap();
            prop_assert!(h >= -1e-10, "{} gave {h}", phi.descriptor());
        }
    }

    #[test]
    fn variance_is_the_square_entropy(seed in any::<u64>(), d in 1usize..4, k in 1usize..5) {
        let z = law(seed, d, k);
        let (a, b) = (variance(&z), variance_as_entropy(&z).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn square_derivative_is_the_anticommutator(seed in any::<u64>(), d in 1usize..5) {
        let mut r = keyed(seed, "properties", 1);
        let (a, e) = (rng::hermitian(&mut r, d), rng::hermitian(&mut r, d));
        let got = frechet_derivative(&PhiFunction::square(), &a, &e).unwrap();
        let want = a.anticommutator(&e);
        prop_assert!(got.max_abs_diff(&want) <= 1e-10 * (1.0 + want.frobenius_norm()));
    }

    #[test]
    fn parseval_holds(seed in any::<u64>(), n in 0usize..6, d in 1usize..4) {
        let mut r = keyed(seed, "properties", 2);
        let (dev, scale) = parseval_deviation(&random_hermitian_function(&mut r, n, d));
        prop_assert!(dev <= suites::identity_tol(scale));
    }

    #[test]
    fn sweeps_are_seed_deterministic(seed in any::<u64>()) {
        let a = suites::efron_stein(&Serial, 2, 3, 5, seed).unwrap();
        let b = suites::efron_stein(&Serial, 2, 3, 5, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
