//! Operator identities on the torus, checked on random band-limited data.

use gtlab::init::{random_band_limited, seeded_rng};
use gtlab::GridFunction;
use proptest::prelude::*;

fn band_limited(n: usize, band: usize, seed: u64) -> GridFunction {
    random_band_limited(n, band, &mut seeded_rng(seed)).unwrap()
}

fn max_diff(a: &GridFunction, b: &GridFunction) -> f64 {
    a.samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn resolutions() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![16usize, 32, 64, 128, 256])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn antiderivative_has_zero_mean(n in resolutions(), seed in any::<u64>(), mean in -3.0f64..3.0) {
        let f = band_limited(n, n / 4, seed).shift(mean);
        prop_assert!(f.antiderivative().average().abs() < 1e-12);
    }

    #[test]
    fn derivative_inverts_antiderivative(n in resolutions(), seed in any::<u64>()) {
        let f = band_limited(n, n / 4, seed);
        prop_assert!(max_diff(&f.antiderivative().derivative(), &f) < 1e-10);
    }

    #[test]
    fn antiderivative_of_derivative_removes_mean(
        n in resolutions(), seed in any::<u64>(), mean in -3.0f64..3.0
    ) {
        let f = band_limited(n, n / 4, seed).shift(mean);
        let back = f.derivative().antiderivative();
        prop_assert!(max_diff(&back, &f.shift(-mean)) < 1e-10);
    }

    #[test]
    fn antiderivative_divides_coefficients_by_ik(n in resolutions(), seed in any::<u64>()) {
        let f = band_limited(n, n / 4, seed);
        let (fh, gh) = (f.fourier(), f.antiderivative().fourier());
        prop_assert!(gh.get(0).unwrap().norm() < 1e-14);
        for (k, c) in fh.modes().filter(|(k, _)| *k != 0) {
            let expected = c / num_complex::Complex64::new(0.0, k as f64);
            prop_assert!((gh.get(k).unwrap() - expected).norm() < 1e-12, "mode {}", k);
        }
    }

    #[test]
    fn plancherel(n in resolutions(), seed in any::<u64>(), mean in -3.0f64..3.0) {
        let f = band_limited(n, n / 2 - 1, seed).shift(mean);
        let lhs = f.inner(&f).unwrap();
        prop_assert!((lhs - f.fourier().energy()).abs() < 1e-12 * lhs.max(1.0));
    }
}

#[test]
fn poincare_inequality_on_seeded_functions() {
    for seed in 0..100 {
        let f = band_limited(128, 16, seed);
        assert!(f.average().abs() < 1e-14);
        assert!(
            f.norm() <= f.derivative().norm() * (1.0 + 1e-12),
            "seed {seed}: {} > {}",
            f.norm(),
            f.derivative().norm()
        );
    }
}

#[test]
fn poincare_equality_on_first_harmonics() {
    for (a, b) in [(1.0, 0.0), (0.0, 1.0), (0.3, -2.0)] {
        let f = gtlab::init::harmonic(64, 1, a, b).unwrap();
        assert!((f.norm() - f.derivative().norm()).abs() < 1e-12);
    }
    // any higher mode makes it strict
    let f = gtlab::init::harmonic(64, 2, 1.0, 0.0).unwrap();
    assert!(f.norm() < f.derivative().norm() - 0.1);
}
