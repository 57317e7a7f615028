//! Initial-data presets.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::torus::{FourierCoeffs, GridError, GridFunction};

/// `a·cos(kx) + b·sin(kx)`.
pub fn harmonic(n: usize, k: i64, a: f64, b: f64) -> Result<GridFunction, GridError> {
    let k = k as f64;
    GridFunction::from_fn(n, |x| a * (k * x).cos() + b * (k * x).sin())
}

/// Real random function with Fourier modes `0 < |k| ≤ band` only, mean zero.
/// Coefficients are uniform in the unit square, drawn from `rng`.
pub fn random_band_limited<R: Rng>(
    n: usize,
    band: usize,
    rng: &mut R,
) -> Result<GridFunction, GridError> {
    let band = band.min(n / 2 - 1);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..=band {
        let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        coeffs[k] = z;
        coeffs[n - k] = z.conj();
    }
    Ok(GridFunction::from_fourier(&FourierCoeffs::from_fft_order(coeffs)?))
}

/// A reproducible generator for `seed`.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Default random macro data for `seed`: `u` mean-zero, `v` with a random
/// mean, both band-limited to `|k| ≤ N/8`.
pub fn random_macro_2v(n: usize, seed: u64) -> Result<(GridFunction, GridFunction), GridError> {
    let mut rng = seeded_rng(seed);
    let u = random_band_limited(n, n / 8, &mut rng)?;
    let v_mean: f64 = rng.random_range(-1.0..1.0);
    let v = random_band_limited(n, n / 8, &mut rng)?.shift(v_mean);
    Ok((u, v))
}

/// Three-velocity analogue of [`random_macro_2v`]: `u1` mean-zero.
pub fn random_macro_3v(
    n: usize,
    seed: u64,
) -> Result<(GridFunction, GridFunction, GridFunction), GridError> {
    let mut rng = seeded_rng(seed);
    let u1 = random_band_limited(n, n / 8, &mut rng)?;
    let m2: f64 = rng.random_range(-1.0..1.0);
    let u2 = random_band_limited(n, n / 8, &mut rng)?.shift(m2);
    let m3: f64 = rng.random_range(-1.0..1.0);
    let u3 = random_band_limited(n, n / 8, &mut rng)?.shift(m3);
    Ok((u1, u2, u3))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_limited_is_real_mean_zero_and_in_band() {
        let mut rng = seeded_rng(7);
        let f = random_band_limited(64, 8, &mut rng).unwrap();
        assert!(f.average().abs() < 1e-15);
        for (k, c) in f.fourier().modes() {
            if k.abs() > 8 {
                assert!(c.norm() < 1e-14, "mode {k}");
            }
        }
        assert!(f.norm() > 0.1);
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = random_macro_2v(32, 11).unwrap();
        let b = random_macro_2v(32, 11).unwrap();
        let c = random_macro_2v(32, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn harmonic_matches_closed_form() {
        let h = harmonic(16, 3, 2.0, -1.0).unwrap();
        for (x, v) in h.nodes().iter().zip(h.samples()) {
            assert!((v - (2.0 * (3.0 * x).cos() - (3.0 * x).sin())).abs() < 1e-14);
        }
    }
}
