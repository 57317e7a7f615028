//! Weighted Poincaré constants for two-piece weights and the improved
//! decay rate built on them.
//!
//! For `ω = ω₁` on `(0, π]` and `ω₂` on `(π, 2π]`, the optimal constant in
//! `‖u − u_avg‖²_ω ≤ C²_ω ‖∂u‖²`-type inequalities is `1/c_min`, where
//! `c_min` is the first positive zero of the determinant of a 5×5 matrix
//! `M(λ)` built from the piecewise solutions of the Euler–Lagrange equation.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::rates::{equivalence_prefactor, RateReport, RateSource, RelaxationProfile};

pub const DEFAULT_SCAN_STEP: f64 = 1e-3;
pub const ROOT_TOL: f64 = 1e-12;
/// A second root closer than this to `c_min` is flagged.
pub const CLOSE_ROOT_GAP: f64 = 1e-3;
/// Largest scan grid; tiny weights push the first root out of reach.
pub const MAX_SCAN_POINTS: usize = 20_000_000;
/// A local minimum of `|det|` this small relative to its neighbours is a
/// double root.
const DOUBLE_ROOT_REL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoincareError {
    #[error("weights must be positive and finite, got ({0}, {1})")]
    InvalidWeight(f64, f64),
    #[error("no root of det M(λ) in (0, {0}]; increase lambda_max")]
    NoRoot(f64),
    #[error("scan parameters invalid: lambda_max = {0}, step = {1}")]
    InvalidScan(f64, f64),
    #[error("weights need sigma piecewise constant with a single jump at pi")]
    UnsupportedProfile,
    #[error("weight denominator 2 sigma - theta - alpha = {0} is not positive")]
    NonPositiveDenominator(f64),
    #[error("alpha = {alpha} is not admissible: need 0 < alpha <= {bound}")]
    Inadmissible { alpha: f64, bound: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPieceWeight {
    pub w1: f64,
    pub w2: f64,
}

impl TwoPieceWeight {
    pub fn new(w1: f64, w2: f64) -> Result<Self, PoincareError> {
        if !(w1 > 0.0 && w2 > 0.0 && w1.is_finite() && w2.is_finite()) {
            return Err(PoincareError::InvalidWeight(w1, w2));
        }
        Ok(Self { w1, w2 })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            w1: c * self.w1,
            w2: c * self.w2,
        }
    }

    pub fn max(&self) -> f64 {
        self.w1.max(self.w2)
    }

    pub fn min(&self) -> f64 {
        self.w1.min(self.w2)
    }

    /// `4/min(ω)`: the first root lies below this.
    pub fn default_lambda_max(&self) -> f64 {
        4.0 / self.min()
    }
}

/// `M(λ)` entry by entry; the last column multiplies the Lagrange multiplier.
pub fn m_lambda(lambda: f64, w: &TwoPieceWeight) -> [[f64; 5]; 5] {
    let (w1, w2) = (w.w1, w.w2);
    let a = PI * (lambda * w1).sqrt();
    let b = PI * (lambda * w2).sqrt();
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let (sb2, cb2) = (2.0 * b).sin_cos();
    let (r1, r2) = (w1.sqrt(), w2.sqrt());
    let tau = (w2 - w1) / (lambda * w1 * w2);
    [
        [0.0, 1.0, -sb2, -cb2, tau],
        [sa, ca, -sb, -cb, tau],
        [r1, 0.0, -r2 * cb2, r2 * sb2, 0.0],
        [r1 * ca, -r1 * sa, -r2 * cb, r2 * sb, 0.0],
        [
            (1.0 - ca) / r1,
            sa / r1,
            (cb - cb2) / r2,
            (sb2 - sb) / r2,
            PI * (w2 + w1) / (lambda.sqrt() * w1 * w2),
        ],
    ]
}

/// Determinant by LU with partial pivoting.
pub fn det5(mut m: [[f64; 5]; 5]) -> f64 {
    let mut det = 1.0;
    for col in 0..5 {
        let pivot = (col..5)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("non-empty range");
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col];
        det *= p;
        for row in col + 1..5 {
            let f = m[row][col] / p;
            if f != 0.0 {
                for k in col..5 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    det
}

pub fn det_m_lambda(lambda: f64, w: &TwoPieceWeight) -> f64 {
    det5(m_lambda(lambda, w))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoincareResult {
    pub weight: TwoPieceWeight,
    pub c_min: f64,
    pub c_omega_sq: f64,
    /// All roots found in the scanned range, increasing.
    pub roots: Vec<f64>,
    /// Another root lies within [`CLOSE_ROOT_GAP`] of `c_min`.
    pub close_root: bool,
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    while b - a > ROOT_TOL {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Minimizes `g` on `[a, b]` by golden sections; returns `(x, g(x))`.
fn golden_min(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    while b - a > ROOT_TOL {
        if g1 < g2 {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - r * (b - a);
            g1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + r * (b - a);
            g2 = g(x2);
        }
    }
    let x = 0.5 * (a + b);
    (x, g(x))
}

/// Roots of `f` on a uniform grid: sign changes are bisected; interior
/// local minima of `|f|` are examined for a pair of close roots or a
/// double root that the sign test cannot see.
pub fn scan_roots(f: impl Fn(f64) -> f64 + Sync, grid: &[f64]) -> Vec<f64> {
    let vals: Vec<f64> = grid.par_iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..grid.len() {
        if vals[i] == 0.0 {
            roots.push(grid[i]);
            continue;
        }
        if i + 1 < grid.len() && vals[i + 1] != 0.0 && (vals[i] < 0.0) != (vals[i + 1] < 0.0) {
            roots.push(bisect(&f, grid[i], grid[i + 1]));
            continue;
        }
        if i == 0 || i + 1 >= grid.len() {
            continue;
        }
        let (l, c, r) = (vals[i - 1], vals[i], vals[i + 1]);
        let same_sign = (l < 0.0) == (c < 0.0) && (c < 0.0) == (r < 0.0) && l != 0.0 && r != 0.0;
        if !(same_sign && c.abs() < l.abs() && c.abs() <= r.abs()) {
            continue;
        }
        let s = c.signum();
        let g = |x: f64| s * f(x);
        let (xm, gm) = golden_min(&g, grid[i - 1], grid[i + 1]);
        if gm <= 0.0 {
            roots.push(bisect(&f, grid[i - 1], xm));
            roots.push(bisect(&f, xm, grid[i + 1]));
        } else if gm < DOUBLE_ROOT_REL * l.abs().max(r.abs()) {
            roots.push(xm);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 10.0 * ROOT_TOL);
    roots
}

/// First positive zero of `det M(λ)` for `λ ∈ (0, λ_max]`.
pub fn weighted_poincare(
    w: &TwoPieceWeight,
    lambda_max: Option<f64>,
    scan_step: Option<f64>,
) -> Result<PoincareResult, PoincareError> {
    let w = TwoPieceWeight::new(w.w1, w.w2)?;
    let lambda_max = lambda_max.unwrap_or_else(|| w.default_lambda_max());
    let step = scan_step.unwrap_or(DEFAULT_SCAN_STEP);
    if !(lambda_max > 0.0 && step > 0.0 && step < lambda_max)
        || lambda_max / step > MAX_SCAN_POINTS as f64
    {
        return Err(PoincareError::InvalidScan(lambda_max, step));
    }
    let count = (lambda_max / step).ceil() as usize;
    let grid: Vec<f64> = (1..=count).map(|i| (i as f64 * step).min(lambda_max)).collect();
    let roots = scan_roots(|l| det_m_lambda(l, &w), &grid);
    let c_min = *roots.first().ok_or(PoincareError::NoRoot(lambda_max))?;
    let close_root = roots.get(1).is_some_and(|r| r - c_min < CLOSE_ROOT_GAP);
    Ok(PoincareResult {
        weight: w,
        c_min,
        c_omega_sq: 1.0 / c_min,
        roots,
        close_root,
    })
}

/// `ω = (σ − α)²/(2σ − θ − α)` on each piece.
pub fn weight_from_sigma(
    sigma: &RelaxationProfile,
    theta: f64,
    alpha: f64,
) -> Result<TwoPieceWeight, PoincareError> {
    let (s1, s2) = sigma
        .two_piece_values()
        .ok_or(PoincareError::UnsupportedProfile)?;
    let piece = |s: f64| {
        let den = 2.0 * s - theta - alpha;
        if den > 0.0 {
            Ok((s - alpha).powi(2) / den)
        } else {
            Err(PoincareError::NonPositiveDenominator(den))
        }
    };
    let (w1, w2) = (piece(s1)?, piece(s2)?);
    TwoPieceWeight::new(w1, w2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationStep {
    pub alpha: f64,
    pub weight: TwoPieceWeight,
    pub c_omega_sq: f64,
    /// `θ − θ²C²_ω/4`, the largest rate the condition allows.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImprovedAlpha {
    pub theta: f64,
    pub alpha_max: f64,
    pub history: Vec<IterationStep>,
    pub converged: bool,
    /// Iteration stopped because the next iterate violated the condition.
    pub stopped_inadmissible: bool,
}

impl ImprovedAlpha {
    pub fn report(&self) -> RateReport {
        RateReport {
            theta: Some(self.theta),
            rate: self.alpha_max,
            prefactor: Some(equivalence_prefactor(self.theta)),
            source: RateSource::ImprovedPoincare,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "n,alpha,w1,w2,c_min,c_omega_sq,bound")?;
        for (n, s) in self.history.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                n,
                s.alpha,
                s.weight.w1,
                s.weight.w2,
                1.0 / s.c_omega_sq,
                s.c_omega_sq,
                s.bound
            )?;
        }
        Ok(())
    }
}

fn evaluate(
    sigma: &RelaxationProfile,
    theta: f64,
    alpha: f64,
) -> Result<IterationStep, PoincareError> {
    let weight = weight_from_sigma(sigma, theta, alpha)?;
    let c2 = weighted_poincare(&weight, None, None)?.c_omega_sq;
    Ok(IterationStep {
        alpha,
        weight,
        c_omega_sq: c2,
        bound: theta - theta * theta * c2 / 4.0,
    })
}

/// Fixed-point iteration `α_n = θ − θ² C²_{ω_{α_{n−1}}}/4` while the
/// condition `0 < α ≤ θ − θ² C²_{ω_α}/4` keeps holding.
pub fn improved_alpha(
    sigma: &RelaxationProfile,
    theta: f64,
    alpha0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ImprovedAlpha, PoincareError> {
    let first = evaluate(sigma, theta, alpha0)?;
    if !(alpha0 > 0.0 && alpha0 <= first.bound) {
        return Err(PoincareError::Inadmissible {
            alpha: alpha0,
            bound: first.bound,
        });
    }
    let mut history = vec![first];
    let mut converged = false;
    let mut stopped_inadmissible = false;
    for _ in 0..max_iter {
        let last = history[history.len() - 1];
        let next_alpha = last.bound;
        let next = match evaluate(sigma, theta, next_alpha) {
            Ok(s) if next_alpha > 0.0 && next_alpha <= s.bound + ROOT_TOL => s,
            _ => {
                stopped_inadmissible = true;
                break;
            }
        };
        history.push(next);
        if (next_alpha - last.alpha).abs() < tol {
            converged = true;
            break;
        }
    }
    Ok(ImprovedAlpha {
        theta,
        alpha_max: history[history.len() - 1].alpha,
        history,
        converged,
        stopped_inadmissible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn w(w1: f64, w2: f64) -> TwoPieceWeight {
        TwoPieceWeight::new(w1, w2).unwrap()
    }

    #[test]
    fn uniform_weight_determinant() {
        assert!(det_m_lambda(1.0, &w(1.0, 1.0)).abs() < 1e-12);
        assert!(det_m_lambda(0.5, &w(1.0, 1.0)).abs() > 1e-3);
    }

    #[test]
    fn lu_determinant_matches_expansion() {
        // permutation-heavy matrix with known determinant
        let m = [
            [0.0, 2.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 3.0, 0.0],
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 5.0],
            [0.0, 0.0, 4.0, 0.0, 1.0],
        ];
        // permutation (2,0,4,1,3): sign +1
        assert_abs_diff_eq!(det5(m), 120.0, epsilon = 1e-12);
        let mut m2 = m;
        m2.swap(0, 1);
        assert_abs_diff_eq!(det5(m2), -120.0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_weight_recovers_classical_constant() {
        for c in [0.5, 1.0, 2.0] {
            let r = weighted_poincare(&w(c, c), None, None).unwrap();
            assert_abs_diff_eq!(r.c_min * c, 1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(r.c_omega_sq, c, epsilon = 1e-8);
        }
    }

    #[test]
    fn scaling_law() {
        let base = w(0.46410, 1.85641);
        let a = weighted_poincare(&base, None, None).unwrap();
        let b = weighted_poincare(&base.scaled(2.0), None, None).unwrap();
        assert_abs_diff_eq!(b.c_min, a.c_min / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn roots_are_increasing_and_bounded_by_sup_weight() {
        for &(a, b) in &[(1.0, 2.0), (0.2, 5.0), (3.0, 0.5), (0.1, 20.0), (1.0, 16.0 / 7.0)] {
            let r = weighted_poincare(&w(a, b), None, None).unwrap();
            assert!(r.roots.windows(2).all(|p| p[0] < p[1]));
            assert_eq!(r.c_min, r.roots[0]);
            assert!(r.c_omega_sq <= w(a, b).max() + 1e-9, "({a},{b})");
            assert!(r.c_omega_sq >= w(a, b).min() - 1e-9, "({a},{b})");
        }
    }

    #[test]
    fn sign_changes_bracket_roots() {
        let ww = w(0.46410, 1.85641);
        let r = weighted_poincare(&ww, None, None).unwrap();
        let d = |l| det_m_lambda(l, &ww);
        assert!(d(r.c_min - 1e-4) * d(r.c_min + 1e-4) < 0.0);
    }

    #[test]
    fn oversized_scan_is_rejected() {
        let w = TwoPieceWeight::new(1e-6, 1.0).unwrap();
        assert!(matches!(
            weighted_poincare(&w, None, None),
            Err(PoincareError::InvalidScan(..))
        ));
    }

    #[test]
    fn missing_root_is_an_error() {
        assert_eq!(
            weighted_poincare(&w(1.0, 1.0), Some(0.5), None),
            Err(PoincareError::NoRoot(0.5))
        );
        assert!(TwoPieceWeight::new(0.0, 1.0).is_err());
    }

    #[test]
    fn weight_examples() {
        let s = RelaxationProfile::two_piece(1.0, 4.0).unwrap();
        let ww = weight_from_sigma(&s, 1.0, 0.3).unwrap();
        assert_abs_diff_eq!(ww.w1, 0.7, epsilon = 1e-15);
        let ww = weight_from_sigma(&s, 1.0, 0.0).unwrap();
        assert_eq!(ww.w1, 1.0);
        assert_abs_diff_eq!(ww.w2, 16.0 / 7.0, epsilon = 1e-15);
        assert!(matches!(
            weight_from_sigma(&s, 1.0, 1.0),
            Err(PoincareError::NonPositiveDenominator(_))
        ));
        let g = crate::torus::GridFunction::from_fn(16, |x| 2.0 + x.sin()).unwrap();
        let sampled = RelaxationProfile::sampled(g).unwrap();
        assert_eq!(
            weight_from_sigma(&sampled, 1.0, 0.1),
            Err(PoincareError::UnsupportedProfile)
        );
    }

    #[test]
    fn inadmissible_start_is_rejected() {
        let s = RelaxationProfile::two_piece(1.0, 4.0).unwrap();
        assert!(matches!(
            improved_alpha(&s, 1.0, 0.9, 1e-6, 100),
            Err(PoincareError::Inadmissible { .. })
        ));
    }
}
