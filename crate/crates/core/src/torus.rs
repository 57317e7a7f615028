//! Periodic grid functions on `[0, 2π)` and their spectral calculus.
//!
//! A [`GridFunction`] stores `N` samples at the nodes `x_j = 2πj/N`. All
//! integrals are normalized by `1/2π`, so on a uniform periodic grid they are
//! plain arithmetic means of the samples:
//!
//! ```text
//! avg(h)   = (1/2π) ∫ h dx          ≈ (1/N) Σ h_j
//! <f, g>   = (1/2π) ∫ f conj(g) dx  ≈ (1/N) Σ f_j conj(g_j)
//! ĥ(k)     = (1/2π) ∫ h e^{-ikx} dx ≈ (1/N) Σ h_j e^{-ikx_j}
//! ```
//!
//! Derivative and anti-derivative act on Fourier coefficients (`ik` resp.
//! `1/(ik)`); the Nyquist mode `k = -N/2` is always dropped by both.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::io::{self, BufRead, Read, Write};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

/// Smallest admissible grid resolution.
pub const MIN_RESOLUTION: usize = 8;

/// Below this |average| the anti-derivative is taken purely in Fourier space.
const ZERO_MEAN_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid resolution {0} must be even and at least {MIN_RESOLUTION}")]
    InvalidResolution(usize),
    #[error("incompatible grids: resolution {left} vs {right}")]
    ResolutionMismatch { left: usize, right: usize },
    #[error("malformed grid data: {0}")]
    Malformed(String),
}

/// Sample type of a grid function: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + Default
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn to_complex(self) -> Complex64;
    /// Projects a complex value back; real samples keep the real part.
    fn from_complex(z: Complex64) -> Self;
    fn from_real(x: f64) -> Self;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn abs_sq(self) -> f64;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_complex(z: Complex64) -> Self {
        z.re
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    fn to_complex(self) -> Complex64 {
        self
    }
    fn from_complex(z: Complex64) -> Self {
        z
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn is_finite(self) -> bool {
        Complex64::is_finite(self)
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

fn check_resolution(n: usize) -> Result<(), GridError> {
    if n < MIN_RESOLUTION || n % 2 != 0 {
        return Err(GridError::InvalidResolution(n));
    }
    Ok(())
}

/// Signed wavenumber of FFT slot `idx` on an `n`-point grid, in `[-n/2, n/2)`.
pub fn wavenumber(idx: usize, n: usize) -> i64 {
    let idx = idx as i64;
    let n = n as i64;
    if idx < n / 2 {
        idx
    } else {
        idx - n
    }
}

/// Node coordinates `x_j = 2πj/N`.
pub fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// Samples of a periodic function on the uniform grid. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T: Scalar = f64> {
    samples: Vec<T>,
}

pub type ComplexGridFunction = GridFunction<Complex64>;

impl<T: Scalar> GridFunction<T> {
    pub fn new(samples: Vec<T>) -> Result<Self, GridError> {
        check_resolution(samples.len())?;
        Ok(Self { samples })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> T) -> Result<Self, GridError> {
        check_resolution(n)?;
        Ok(Self {
            samples: nodes(n).into_iter().map(f).collect(),
        })
    }

    pub fn constant(n: usize, c: T) -> Result<Self, GridError> {
        Self::from_fn(n, |_| c)
    }

    pub fn zeros(n: usize) -> Result<Self, GridError> {
        Self::constant(n, T::default())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.len() as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        nodes(self.len())
    }

    pub fn ensure_same_grid(&self, other: &GridFunction<impl Scalar>) -> Result<(), GridError> {
        if self.len() != other.len() {
            return Err(GridError::ResolutionMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self, GridError> {
        self.ensure_same_grid(other)?;
        Ok(Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn shift(&self, c: T) -> Self {
        self.map(|v| v + c)
    }

    pub fn all_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    /// `(1/2π) ∫ f dx`, i.e. the arithmetic mean of the samples.
    pub fn average(&self) -> T {
        let mut sum = T::default();
        for &v in &self.samples {
            sum = sum + v;
        }
        sum * T::from_real(1.0 / self.len() as f64)
    }

    /// Normalized inner product `(1/2π) ∫ f conj(g) dx`.
    pub fn inner(&self, other: &Self) -> Result<T, GridError> {
        self.ensure_same_grid(other)?;
        let mut sum = T::default();
        for (&a, &b) in self.samples.iter().zip(&other.samples) {
            sum = sum + a * b.conj();
        }
        Ok(sum * T::from_real(1.0 / self.len() as f64))
    }

    /// `‖f‖² = <f, f>`.
    pub fn norm_sq(&self) -> f64 {
        self.samples.iter().map(|v| v.abs_sq()).sum::<f64>() / self.len() as f64
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `(1/2π) ∫ w f conj(g) dx` for a real weight sampled on the same grid.
    pub fn weighted_inner(&self, other: &Self, weight: &GridFunction) -> Result<T, GridError> {
        self.ensure_same_grid(other)?;
        self.ensure_same_grid(weight)?;
        let mut sum = T::default();
        for ((&a, &b), &w) in self.samples.iter().zip(&other.samples).zip(weight.samples()) {
            sum = sum + a * b.conj() * T::from_real(w);
        }
        Ok(sum * T::from_real(1.0 / self.len() as f64))
    }

    pub fn fourier(&self) -> FourierCoeffs {
        let n = self.len();
        let (fwd, _) = plans(n);
        let mut buf: Vec<Complex64> = self.samples.iter().map(|v| v.to_complex()).collect();
        fwd.process(&mut buf);
        let scale = 1.0 / n as f64;
        for c in &mut buf {
            *c *= scale;
        }
        FourierCoeffs { coeffs: buf }
    }

    pub fn from_fourier(coeffs: &FourierCoeffs) -> Self {
        Self {
            samples: coeffs.synthesize().into_iter().map(T::from_complex).collect(),
        }
    }

    /// Spectral derivative: multiply by `ik`, Nyquist mode zeroed.
    pub fn derivative(&self) -> Self {
        let mut c = self.fourier();
        let n = self.len();
        for (idx, z) in c.coeffs.iter_mut().enumerate() {
            let k = wavenumber(idx, n);
            *z = if k == -(n as i64) / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                *z * Complex64::new(0.0, k as f64)
            };
        }
        Self::from_fourier(&c)
    }

    /// Anti-derivative `∫_0^x f dy − avg(∫_0^x f dy)`.
    ///
    /// For mean-zero data this is division by `ik` in Fourier space with the
    /// zero (and Nyquist) mode removed. Otherwise the mean part contributes the
    /// exact linear ramp `avg(f)·x`, recentred to zero discrete average.
    pub fn antiderivative(&self) -> Self {
        let avg = self.average();
        let spectral = self.spectral_antiderivative();
        if avg.to_complex().norm() < ZERO_MEAN_TOL {
            return spectral;
        }
        let n = self.len();
        let x_mean = PI * (n - 1) as f64 / n as f64;
        let ramp = nodes(n)
            .into_iter()
            .map(|x| avg * T::from_real(x - x_mean));
        Self {
            samples: spectral
                .samples
                .iter()
                .zip(ramp)
                .map(|(&s, r)| s + r)
                .collect(),
        }
    }

    fn spectral_antiderivative(&self) -> Self {
        let mut c = self.fourier();
        let n = self.len();
        for (idx, z) in c.coeffs.iter_mut().enumerate() {
            let k = wavenumber(idx, n);
            *z = if k == 0 || k == -(n as i64) / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                *z / Complex64::new(0.0, k as f64)
            };
        }
        Self::from_fourier(&c)
    }
}

impl GridFunction<f64> {
    pub fn to_complex(&self) -> ComplexGridFunction {
        GridFunction {
            samples: self.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV with header `x,value`, one row per node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,value")?;
        for (x, v) in nodes(self.len()).iter().zip(&self.samples) {
            writeln!(w, "{x:e},{v:e}")?;
        }
        Ok(())
    }

    /// Reads the `value` column written by [`GridFunction::write_csv`].
    /// A second column is required; the `x` column is only checked for count.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, GridError> {
        let mut values = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| GridError::Malformed(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(_x), Some(v)) = (cols.next(), cols.next()) else {
                return Err(GridError::Malformed(format!(
                    "line {}: expected two columns",
                    lineno + 1
                )));
            };
            match v.parse::<f64>() {
                Ok(v) => values.push(v),
                // header row
                Err(_) if values.is_empty() && lineno == 0 => continue,
                Err(e) => {
                    return Err(GridError::Malformed(format!("line {}: {e}", lineno + 1)))
                }
            }
        }
        Self::new(values)
    }

    /// Compact binary dump: `N` as little-endian `u64`, then `N` LE doubles.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for v in &self.samples {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, GridError> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)
            .map_err(|e| GridError::Malformed(e.to_string()))?;
        let n = u64::from_le_bytes(word) as usize;
        check_resolution(n)?;
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut word)
                .map_err(|e| GridError::Malformed(e.to_string()))?;
            samples.push(f64::from_le_bytes(word));
        }
        Ok(Self { samples })
    }
}

/// Normalized Fourier coefficients in FFT order (`k = 0, 1, …, N/2−1, −N/2, …, −1`).
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCoeffs {
    coeffs: Vec<Complex64>,
}

impl FourierCoeffs {
    pub fn from_fft_order(coeffs: Vec<Complex64>) -> Result<Self, GridError> {
        check_resolution(coeffs.len())?;
        Ok(Self { coeffs })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_fft_order(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn slot(&self, k: i64) -> Option<usize> {
        let n = self.len() as i64;
        if k < -n / 2 || k >= n / 2 {
            return None;
        }
        Some(k.rem_euclid(n) as usize)
    }

    /// `ĥ(k)` for `k ∈ [−N/2, N/2)`, `None` outside the resolved band.
    pub fn get(&self, k: i64) -> Option<Complex64> {
        self.slot(k).map(|i| self.coeffs[i])
    }

    /// `(k, ĥ(k))` pairs in ascending `k`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n = self.len() as i64;
        (-n / 2..n / 2).map(move |k| (k, self.coeffs[k.rem_euclid(n) as usize]))
    }

    /// Plancherel: `Σ_k |ĥ(k)|²`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    fn synthesize(&self) -> Vec<Complex64> {
        let (_, inv) = plans(self.len());
        let mut buf = self.coeffs.clone();
        inv.process(&mut buf);
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(n, f).unwrap()
    }

    fn max_diff(a: &GridFunction, b: &GridFunction) -> f64 {
        a.samples()
            .iter()
            .zip(b.samples())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn resolution_is_validated() {
        assert_eq!(
            GridFunction::<f64>::zeros(6),
            Err(GridError::InvalidResolution(6))
        );
        assert_eq!(
            GridFunction::<f64>::zeros(9),
            Err(GridError::InvalidResolution(9))
        );
        assert!(GridFunction::<f64>::zeros(10).is_ok());
    }

    #[test]
    fn averages() {
        assert_abs_diff_eq!(grid(16, |_| 2.5).average(), 2.5, epsilon = 1e-15);
        assert!(grid(64, f64::sin).average().abs() < 1e-14);
        assert_abs_diff_eq!(
            grid(32, |x| 1.0 + (3.0 * x).cos()).average(),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn antiderivative_examples() {
        let n = 64;
        let f = grid(n, f64::sin).antiderivative();
        assert!(max_diff(&f, &grid(n, |x| -x.cos())) < 1e-13);
        let z = grid(n, |_| 0.0).antiderivative();
        assert!(z.max_abs() == 0.0);
    }

    #[test]
    fn antiderivative_matches_cumulative_sum_oracle() {
        // oracle: composite Simpson on a 64x refined grid, then mean removal
        let n = 128;
        let refine = 64;
        let f = |x: f64| (2.0 * x).cos();
        let h = 2.0 * PI / n as f64;
        let mut cumulative = vec![0.0; n];
        let sub = h / refine as f64;
        for j in 1..n {
            let a = (j - 1) as f64 * h;
            let mut s = 0.0;
            for m in 0..refine {
                let x0 = a + m as f64 * sub;
                s += sub / 6.0 * (f(x0) + 4.0 * f(x0 + sub / 2.0) + f(x0 + sub));
            }
            cumulative[j] = cumulative[j - 1] + s;
        }
        let mean = cumulative.iter().sum::<f64>() / n as f64;
        let oracle = GridFunction::new(cumulative.iter().map(|c| c - mean).collect()).unwrap();
        let got = grid(n, f).antiderivative();
        assert!(max_diff(&got, &oracle) < 1e-10);
    }

    #[test]
    fn antiderivative_of_nonzero_mean_is_centred_ramp() {
        let n = 32;
        let f = grid(n, |x| 1.0 + x.sin());
        let a = f.antiderivative();
        assert!(a.average().abs() < 1e-13);
        // ∫_0^x (1 + sin) = x + 1 − cos x; discrete mean of x_j is π(N−1)/N
        let x_mean = PI * (n - 1) as f64 / n as f64;
        let expected = grid(n, |x| x - x_mean - x.cos());
        assert!(max_diff(&a, &expected) < 1e-12);
    }

    #[test]
    fn derivative_examples() {
        let n = 64;
        assert!(max_diff(&grid(n, f64::sin).derivative(), &grid(n, f64::cos)) < 1e-13);
        assert!(grid(n, |_| 5.0).derivative().max_abs() < 1e-13);
    }

    #[test]
    fn derivative_matches_finite_difference_oracle() {
        let n = 256;
        let f = |x: f64| (4.0 * x).cos();
        let h = 1e-4;
        let oracle = grid(n, |x| {
            (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
        });
        let got = grid(n, f).derivative();
        assert!(max_diff(&got, &oracle) < 1e-8);
        assert!(max_diff(&got, &grid(n, |x| -4.0 * (4.0 * x).sin())) < 1e-11);
    }

    #[test]
    fn inner_products() {
        let n = 64;
        let s = grid(n, f64::sin);
        let c = grid(n, f64::cos);
        let one = grid(n, |_| 1.0);
        assert_abs_diff_eq!(s.inner(&s).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.inner(&c).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(one.inner(&one).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.norm_sq(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn inner_rejects_mismatched_grids() {
        let a = grid(16, f64::sin);
        let b = grid(32, f64::sin);
        assert_eq!(
            a.inner(&b),
            Err(GridError::ResolutionMismatch { left: 16, right: 32 })
        );
    }

    #[test]
    fn complex_inner_conjugates_second_argument() {
        let n = 16;
        let e1 = GridFunction::<Complex64>::from_fn(n, |x| Complex64::from_polar(1.0, x)).unwrap();
        let ie1 = e1.scale(Complex64::i());
        // <e, i e> = conj(i) = -i
        let v = e1.inner(&ie1).unwrap();
        assert_abs_diff_eq!(v.re, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v.im, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn fourier_coefficient_normalization() {
        let n = 32;
        let f = grid(n, |x| 3.0 + 2.0 * (2.0 * x).cos());
        let c = f.fourier();
        assert_abs_diff_eq!(c.get(0).unwrap().re, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.get(2).unwrap().re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.get(-2).unwrap().re, 1.0, epsilon = 1e-14);
        assert!(c.get(16).is_none());
        assert!(c.get(-16).is_some());
        let ks: Vec<i64> = c.modes().map(|(k, _)| k).collect();
        assert_eq!(ks.first(), Some(&-16));
        assert_eq!(ks.last(), Some(&15));
    }

    #[test]
    fn csv_and_binary_io() {
        let f = grid(16, |x| x.sin() + 0.25);
        let mut csv = Vec::new();
        f.write_csv(&mut csv).unwrap();
        let back = GridFunction::read_csv(csv.as_slice()).unwrap();
        assert!(max_diff(&f, &back) < 1e-15);

        let mut bin = Vec::new();
        f.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 8 + 16 * 8);
        assert_eq!(&bin[..8], &16u64.to_le_bytes());
        assert_eq!(GridFunction::read_binary(bin.as_slice()).unwrap(), f);
    }

    #[test]
    fn truncated_binary_is_rejected() {
        let mut bin = Vec::new();
        grid(8, f64::cos).write_binary(&mut bin).unwrap();
        bin.truncate(30);
        assert!(matches!(
            GridFunction::read_binary(bin.as_slice()),
            Err(GridError::Malformed(_))
        ));
    }
}
