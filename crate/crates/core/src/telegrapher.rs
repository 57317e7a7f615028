//! Spectral gap of the telegrapher operator with a two-piece damping and the
//! resulting optimal decay rate.
//!
//! After rescaling the torus to `[0, 1)` with `σ̃(ξ) = π σ(2πξ)`, a nonzero
//! eigenvalue `γ` solves `v'' = γ(γ − 2σ̃)v` piecewise; matching at `ξ = 1/2`
//! and periodically at `ξ = 1` gives a 4×4 linear system whose determinant
//! has a closed form in `τ_j = sqrt(γ(2σ_j − γ))`.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::poincare::scan_roots;
use crate::rates::{RateReport, RateSource, RelaxationProfile};

/// `|τ₁|` below this is the degenerate (linear-solution) branch.
pub const DEGENERATE_TOL: f64 = 1e-12;
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 60;
pub const DEDUP_TOL: f64 = 1e-8;
pub const DEFAULT_SEEDS: usize = 200;
const REAL_SCAN_POINTS: usize = 4000;
/// Roots closer than this to `γ = 0` are the trivial eigenvalue.
const ZERO_ROOT_TOL: f64 = 1e-6;
/// A root must make the determinant this small (relative to its scale).
const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TelegrapherError {
    #[error("two-piece sigma with a single jump at pi is required")]
    UnsupportedProfile,
    #[error("damping values must be positive, got ({0}, {1})")]
    InvalidSigma(f64, f64),
    #[error("gamma = {0} lies on the degenerate branch tau_1 = 0")]
    Degenerate(Complex64),
    #[error("no nonzero eigenvalue in the strip 0 < Re < {re_max}, |Im| <= {im_max}; enlarge the strip")]
    NoRoots { re_max: f64, im_max: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TelegrapherProblem {
    /// `σ̃` on `(0, 1/2]`.
    pub sigma1: f64,
    /// `σ̃` on `(1/2, 1]`.
    pub sigma2: f64,
    pub re_max: f64,
    pub im_max: f64,
}

impl TelegrapherProblem {
    /// Default strip: `Re γ < 2 min σ̃`, `|Im γ| ≤ 2 max σ̃`.
    pub fn new(sigma1: f64, sigma2: f64) -> Result<Self, TelegrapherError> {
        if !(sigma1 > 0.0 && sigma2 > 0.0) {
            return Err(TelegrapherError::InvalidSigma(sigma1, sigma2));
        }
        Ok(Self {
            sigma1,
            sigma2,
            re_max: 2.0 * sigma1.min(sigma2),
            im_max: 2.0 * sigma1.max(sigma2),
        })
    }

    pub fn with_strip(mut self, re_max: f64, im_max: f64) -> Self {
        self.re_max = re_max;
        self.im_max = im_max;
        self
    }

    /// `‖σ̃‖_{L¹(0,1)}`.
    pub fn l1_norm(&self) -> f64 {
        0.5 * (self.sigma1 + self.sigma2)
    }

    fn taus(&self, gamma: Complex64) -> (Complex64, Complex64) {
        (
            (gamma * (2.0 * self.sigma1 - gamma)).sqrt(),
            (gamma * (2.0 * self.sigma2 - gamma)).sqrt(),
        )
    }
}

/// `σ̃ = π σ` on the unit interval.
pub fn rescale_sigma(sigma: &RelaxationProfile) -> Result<TelegrapherProblem, TelegrapherError> {
    let (s1, s2) = sigma
        .two_piece_values()
        .ok_or(TelegrapherError::UnsupportedProfile)?;
    TelegrapherProblem::new(PI * s1, PI * s2)
}

/// Closed-form determinant of the matching system.
pub fn det_m_gamma(gamma: Complex64, p: &TelegrapherProblem) -> Result<Complex64, TelegrapherError> {
    let (t1, t2) = p.taus(gamma);
    if t1.norm() < DEGENERATE_TOL {
        return Err(TelegrapherError::Degenerate(gamma));
    }
    let r = t2 / t1;
    let (h1, h2) = (t1 / 2.0, t2 / 2.0);
    Ok(-h1.sin() * h2.sin() * (1.0 + r * r) + 2.0 * r * (h1.cos() * h2.cos() - 1.0))
}

/// The 4×4 matching matrix acting on `(A₁, B₁, A₂, B₂)`.
pub fn m_gamma(gamma: Complex64, p: &TelegrapherProblem) -> Result<[[Complex64; 4]; 4], TelegrapherError> {
    let (t1, t2) = p.taus(gamma);
    if t1.norm() < DEGENERATE_TOL {
        return Err(TelegrapherError::Degenerate(gamma));
    }
    let r = t2 / t1;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let (h1, h2) = (t1 / 2.0, t2 / 2.0);
    Ok([
        [one, zero, -t2.cos(), -t2.sin()],
        [zero, one, r * t2.sin(), -r * t2.cos()],
        [h1.cos(), h1.sin(), -h2.cos(), -h2.sin()],
        [h1.sin(), -h1.cos(), -r * h2.sin(), r * h2.cos()],
    ])
}

/// Determinant of a complex 4×4 matrix by LU with partial pivoting.
pub fn det4(mut m: [[Complex64; 4]; 4]) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .expect("non-empty");
        if m[pivot][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col];
        det *= p;
        for row in col + 1..4 {
            let f = m[row][col] / p;
            for k in col..4 {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
        }
    }
    det
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapResult {
    /// `D̃(0)`: smallest real part among the nonzero eigenvalues found.
    pub gap: f64,
    pub eigenvalue: Complex64,
    /// Roots in the strip, sorted by real then imaginary part.
    pub all_roots: Vec<Complex64>,
    /// The minimizing eigenvalue sits on the strip's right edge.
    pub on_boundary: bool,
    pub problem: TelegrapherProblem,
}

impl GapResult {
    pub fn is_real(&self) -> bool {
        self.eigenvalue.im.abs() < DEDUP_TOL
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "re_gamma,im_gamma,abs_det")?;
        for g in &self.all_roots {
            let d = det_m_gamma(*g, &self.problem).map(|d| d.norm()).unwrap_or(f64::NAN);
            writeln!(w, "{},{},{}", g.re, g.im, d)?;
        }
        Ok(())
    }
}

fn newton(p: &TelegrapherProblem, seed: Complex64) -> Option<Complex64> {
    let f = |g: Complex64| det_m_gamma(g, p).ok();
    let mut g = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let h = 1e-7 * (1.0 + g.norm());
        let fg = f(g)?;
        let d = (f(g + h)? - f(g - h)?) / (2.0 * h);
        if d.norm() == 0.0 || !d.is_finite() {
            return None;
        }
        let step = fg / d;
        g -= step;
        if !g.is_finite() {
            return None;
        }
        if step.norm() < NEWTON_TOL * g.norm().max(1.0) {
            return Some(g);
        }
    }
    None
}

fn in_strip(g: Complex64, p: &TelegrapherProblem) -> bool {
    g.re > 0.0 && g.re <= p.re_max + DEDUP_TOL && g.im.abs() <= p.im_max + DEDUP_TOL && g.norm() > ZERO_ROOT_TOL
}

/// Is `g` a genuine zero: `|det|` small compared with the determinant's size nearby.
fn is_zero(g: Complex64, p: &TelegrapherProblem) -> bool {
    let Ok(d) = det_m_gamma(g, p) else {
        return false;
    };
    let (t1, t2) = p.taus(g);
    let scale = (1.0 + (t2 / t1).norm_sqr()) * (t1.im.abs() / 2.0).exp() * (t2.im.abs() / 2.0).exp();
    d.norm() < RESIDUAL_TOL * scale.max(1.0)
}

/// All nonzero eigenvalues in the strip and the smallest real part among them.
pub fn telegrapher_gap(p: &TelegrapherProblem, seeds: Option<usize>) -> Result<GapResult, TelegrapherError> {
    let seeds = seeds.unwrap_or(DEFAULT_SEEDS).max(2);
    let mut candidates: Vec<Complex64> = Vec::new();

    // real axis: the determinant is real there
    let h = p.re_max / REAL_SCAN_POINTS as f64;
    let grid: Vec<f64> = (1..REAL_SCAN_POINTS).map(|i| i as f64 * h).collect();
    let real_det = |x: f64| {
        det_m_gamma(Complex64::new(x, 0.0), p)
            .map(|d| d.re)
            .unwrap_or(f64::NAN)
    };
    candidates.extend(
        scan_roots(real_det, &grid)
            .into_iter()
            .map(|x| Complex64::new(x, 0.0)),
    );

    // complex strip: Newton from a seed grid
    let seed_points: Vec<Complex64> = (0..seeds)
        .flat_map(|i| {
            (0..seeds).map(move |j| {
                let re = p.re_max * (i as f64 + 0.5) / seeds as f64;
                let im = -p.im_max + 2.0 * p.im_max * (j as f64 + 0.5) / seeds as f64;
                Complex64::new(re, im)
            })
        })
        .collect();
    let found: Vec<Complex64> = seed_points
        .par_iter()
        .filter_map(|&s| newton(p, s))
        .collect();
    candidates.extend(found);

    candidates.retain(|&g| in_strip(g, p) && is_zero(g, p));
    candidates.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut roots: Vec<Complex64> = Vec::new();
    for c in candidates {
        if !roots.iter().any(|r| (r - c).norm() < DEDUP_TOL * c.norm().max(1.0)) {
            roots.push(c);
        }
    }
    // snap numerically real roots onto the axis
    for r in &mut roots {
        if r.im.abs() < DEDUP_TOL {
            r.im = 0.0;
        }
    }

    let eigenvalue = *roots
        .iter()
        .min_by(|a, b| a.re.total_cmp(&b.re).then(a.im.abs().total_cmp(&b.im.abs())))
        .ok_or(TelegrapherError::NoRoots {
            re_max: p.re_max,
            im_max: p.im_max,
        })?;
    Ok(GapResult {
        gap: eigenvalue.re,
        eigenvalue,
        on_boundary: (p.re_max - eigenvalue.re).abs() < 1e-6,
        all_roots: roots,
        problem: *p,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BsRate {
    pub problem: TelegrapherProblem,
    pub gap: GapResult,
    pub l1_norm: f64,
    pub alpha: f64,
}

impl BsRate {
    pub fn report(&self) -> RateReport {
        RateReport {
            theta: None,
            rate: self.alpha,
            prefactor: None,
            source: RateSource::BernardSalvarani,
        }
    }
}

/// `α_BS = (1/π) min(‖σ̃‖_{L¹}, D̃(0))`.
pub fn bs_rate(sigma: &RelaxationProfile) -> Result<BsRate, TelegrapherError> {
    let problem = rescale_sigma(sigma)?;
    let gap = telegrapher_gap(&problem, None)?;
    let l1 = problem.l1_norm();
    Ok(BsRate {
        problem,
        alpha: l1.min(gap.gap) / PI,
        l1_norm: l1,
        gap,
    })
}
