//! Closed-form decay rates and their admissibility conditions.
//!
//! Rates are quoted for the entropy functional (the `L²` norm of the
//! solution decays at half the entropy rate). The two-velocity formulas
//! work with `θ ∈ (0, 2)` so that the entropy is equivalent to `‖u‖² + ‖v‖²`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::torus::{GridError, GridFunction};

/// Square-root arguments this close to zero are treated as zero.
const SQRT_GUARD: f64 = 1e-14;
/// Slack granted when an inequality is tight in exact arithmetic.
const CONDITION_TOL: f64 = 1e-12;
/// `σ` within this distance of 2 is the defective constant case.
const DEFECTIVE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("relaxation rate must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("sigma = 2 requires epsilon in (0, 1), got {0:?}")]
    EpsilonRequired(Option<f64>),
    #[error("epsilon is only meaningful for sigma = 2 (got sigma = {0})")]
    UnexpectedEpsilon(f64),
    #[error("need 0 < sigma_min <= sigma_max, got ({0}, {1})")]
    InvalidBounds(f64, f64),
    #[error("need 0 < sigma_min < sigma_max (non-constant profile), got ({0}, {1})")]
    NotStrictlyVarying(f64, f64),
    #[error("twist weight theta must lie in (0, 2), got {0}")]
    ThetaOutOfRange(f64),
    #[error("invalid relaxation profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn guarded_sqrt(x: f64) -> f64 {
    if x < 0.0 && x > -SQRT_GUARD {
        0.0
    } else {
        x.sqrt()
    }
}

// --------------------------------------------------------------------------
// Relaxation profiles
// --------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileKind {
    Constant(f64),
    /// `(breakpoint, value)` pairs: the value holds on `(previous breakpoint, breakpoint]`,
    /// the first piece starting at 0. The last breakpoint is `2π`.
    PiecewiseConstant(Vec<(f64, f64)>),
    Sampled(GridFunction),
}

/// The relaxation function `σ(x) > 0` together with its extreme values.
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxationProfile {
    kind: ProfileKind,
    sigma_min: f64,
    sigma_max: f64,
}

impl RelaxationProfile {
    pub fn constant(sigma: f64) -> Result<Self, RateError> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(RateError::NonPositiveSigma(sigma));
        }
        Ok(Self {
            kind: ProfileKind::Constant(sigma),
            sigma_min: sigma,
            sigma_max: sigma,
        })
    }

    pub fn piecewise(pieces: Vec<(f64, f64)>) -> Result<Self, RateError> {
        if pieces.is_empty() {
            return Err(RateError::InvalidProfile("no pieces given".into()));
        }
        let mut prev = 0.0;
        for &(bp, val) in &pieces {
            if !(bp > prev) || bp > 2.0 * PI + 1e-12 {
                return Err(RateError::InvalidProfile(format!(
                    "breakpoints must increase strictly within (0, 2π], got {bp} after {prev}"
                )));
            }
            if !(val > 0.0) || !val.is_finite() {
                return Err(RateError::NonPositiveSigma(val));
            }
            prev = bp;
        }
        if (prev - 2.0 * PI).abs() > 1e-12 {
            return Err(RateError::InvalidProfile(format!(
                "last breakpoint must be 2π, got {prev}"
            )));
        }
        let (lo, hi) = min_max(pieces.iter().map(|p| p.1));
        Ok(Self {
            kind: ProfileKind::PiecewiseConstant(pieces),
            sigma_min: lo,
            sigma_max: hi,
        })
    }

    /// Two pieces `σ₁` on `(0, π]` and `σ₂` on `(π, 2π]`.
    pub fn two_piece(sigma1: f64, sigma2: f64) -> Result<Self, RateError> {
        Self::piecewise(vec![(PI, sigma1), (2.0 * PI, sigma2)])
    }

    pub fn sampled(samples: GridFunction) -> Result<Self, RateError> {
        if let Some(&bad) = samples
            .samples()
            .iter()
            .find(|v| !(**v > 0.0) || !v.is_finite())
        {
            return Err(RateError::NonPositiveSigma(bad));
        }
        let (lo, hi) = min_max(samples.samples().iter().copied());
        Ok(Self {
            kind: ProfileKind::Sampled(samples),
            sigma_min: lo,
            sigma_max: hi,
        })
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn is_constant(&self) -> bool {
        self.sigma_min == self.sigma_max
    }

    /// The two piece values when the profile is piecewise constant with a
    /// single jump at `π` (a constant profile counts as two equal pieces).
    pub fn two_piece_values(&self) -> Option<(f64, f64)> {
        match &self.kind {
            ProfileKind::Constant(s) => Some((*s, *s)),
            ProfileKind::PiecewiseConstant(p)
                if p.len() == 2 && (p[0].0 - PI).abs() < 1e-12 =>
            {
                Some((p[0].1, p[1].1))
            }
            ProfileKind::PiecewiseConstant(p) if p.len() == 1 => Some((p[0].1, p[0].1)),
            _ => None,
        }
    }

    /// Point evaluation. Pieces are half-open `(a, b]`, so a jump takes its
    /// left-limit value and `x = 0` belongs to the last piece.
    pub fn at(&self, x: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant(s) => *s,
            ProfileKind::PiecewiseConstant(pieces) => {
                let mut x = x.rem_euclid(2.0 * PI);
                if x <= 1e-14 {
                    x = 2.0 * PI;
                }
                pieces
                    .iter()
                    .find(|(bp, _)| x <= *bp + 1e-12)
                    .map(|p| p.1)
                    .unwrap_or_else(|| pieces[pieces.len() - 1].1)
            }
            ProfileKind::Sampled(g) => {
                let n = g.len();
                let idx = (x.rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64).round() as usize % n;
                g.samples()[idx]
            }
        }
    }

    /// Samples at the `n` grid nodes.
    pub fn sample(&self, n: usize) -> Result<GridFunction, RateError> {
        if let ProfileKind::Sampled(g) = &self.kind {
            if g.len() != n {
                return Err(GridError::ResolutionMismatch {
                    left: g.len(),
                    right: n,
                }
                .into());
            }
            return Ok(g.clone());
        }
        Ok(GridFunction::from_fn(n, |x| self.at(x))?)
    }

    /// Every value at which a pointwise supremum has to be evaluated:
    /// the extremes plus all piece values or samples.
    pub fn probe_values(&self) -> Vec<f64> {
        let mut v = vec![self.sigma_min, self.sigma_max];
        match &self.kind {
            ProfileKind::Constant(_) => {}
            ProfileKind::PiecewiseConstant(p) => v.extend(p.iter().map(|q| q.1)),
            ProfileKind::Sampled(g) => v.extend_from_slice(g.samples()),
        }
        v
    }
}

impl fmt::Display for RelaxationProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ProfileKind::Constant(s) => write!(f, "const:{s}"),
            ProfileKind::PiecewiseConstant(p) => {
                let parts: Vec<String> = p.iter().map(|(bp, v)| format!("{v}@{bp:.6}")).collect();
                write!(f, "pc:{}", parts.join(","))
            }
            ProfileKind::Sampled(g) => write!(
                f,
                "sampled(N={}, min={}, max={})",
                g.len(),
                self.sigma_min,
                self.sigma_max
            ),
        }
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

// --------------------------------------------------------------------------
// Rate reports
// --------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateSource {
    ConstantSharp,
    ConstantDefectiveEps(f64),
    PerturbativeThm,
    ImprovedPoincare,
    BernardSalvarani,
    ThreeVelocityCor,
}

impl RateSource {
    pub fn tag(&self) -> String {
        match self {
            RateSource::ConstantSharp => "ConstantSharp".into(),
            RateSource::ConstantDefectiveEps(e) => format!("ConstantDefectiveEps({e})"),
            RateSource::PerturbativeThm => "PerturbativeThm".into(),
            RateSource::ImprovedPoincare => "ImprovedPoincare".into(),
            RateSource::BernardSalvarani => "BernardSalvarani".into(),
            RateSource::ThreeVelocityCor => "ThreeVelocityCor".into(),
        }
    }
}

/// A theoretical rate: entropy twist `θ`, entropy decay exponent and the
/// `L²` prefactor obtained from the entropy equivalence bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    /// Twist weight of the entropy behind the rate, if there is one.
    pub theta: Option<f64>,
    pub rate: f64,
    pub prefactor: Option<f64>,
    pub source: RateSource,
}

impl RateReport {
    /// Decay exponent of the `L²` norm, half the entropy rate.
    pub fn norm_rate(&self) -> f64 {
        self.rate / 2.0
    }
}

/// `sqrt((2+θ)/(2−θ))`: ratio of the entropy equivalence bounds.
pub fn equivalence_prefactor(theta: f64) -> f64 {
    ((2.0 + theta.abs()) / (2.0 - theta.abs())).sqrt()
}

pub fn write_reports_csv<W: Write>(mut w: W, reports: &[RateReport]) -> io::Result<()> {
    writeln!(w, "source,theta,rate,prefactor")?;
    for r in reports {
        let opt = |x: Option<f64>| x.map(|p| p.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{}",
            r.source.tag(),
            opt(r.theta),
            r.rate,
            opt(r.prefactor)
        )?;
    }
    Ok(())
}

pub fn format_reports_table(reports: &[RateReport]) -> String {
    let mut out = format!(
        "{:<28} {:>12} {:>12} {:>12}\n",
        "source", "theta", "rate", "prefactor"
    );
    for r in reports {
        let cell = |x: Option<f64>| {
            x.map(|p| format!("{p:>12.6}"))
                .unwrap_or_else(|| format!("{:>12}", "-"))
        };
        out.push_str(&format!(
            "{:<28} {} {:>12.6} {}\n",
            r.source.tag(),
            cell(r.theta),
            r.rate,
            cell(r.prefactor)
        ));
    }
    out
}

// --------------------------------------------------------------------------
// Constant relaxation
// --------------------------------------------------------------------------

/// Twist weight `θ(σ)`: `σ` below 2, `4/σ` above.
pub fn theta_of_sigma(sigma: f64) -> f64 {
    if sigma < 2.0 {
        sigma
    } else {
        4.0 / sigma
    }
}

/// Spectral gap `μ(σ)` of the constant-coefficient system.
pub fn mu(sigma: f64) -> f64 {
    if sigma <= 2.0 {
        sigma / 2.0
    } else {
        sigma / 2.0 - guarded_sqrt(sigma * sigma / 4.0 - 1.0)
    }
}

/// Sharp rate for constant `σ`; `σ = 2` needs the defect parameter `ε ∈ (0, 1)`.
pub fn constant_rate(sigma: f64, eps: Option<f64>) -> Result<RateReport, RateError> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(RateError::NonPositiveSigma(sigma));
    }
    if (sigma - 2.0).abs() <= DEFECTIVE_TOL {
        let e = match eps {
            Some(e) if e > 0.0 && e < 1.0 => e,
            other => return Err(RateError::EpsilonRequired(other)),
        };
        return Ok(RateReport {
            theta: Some(2.0 * (2.0 - e * e) / (2.0 + e * e)),
            rate: 2.0 * (1.0 - e),
            prefactor: Some(2f64.sqrt() / e),
            source: RateSource::ConstantDefectiveEps(e),
        });
    }
    if eps.is_some() {
        return Err(RateError::UnexpectedEpsilon(sigma));
    }
    let theta = theta_of_sigma(sigma);
    Ok(RateReport {
        theta: Some(theta),
        rate: 2.0 * mu(sigma),
        prefactor: Some(equivalence_prefactor(theta)),
        source: RateSource::ConstantSharp,
    })
}

// --------------------------------------------------------------------------
// Variable relaxation: perturbative rates
// --------------------------------------------------------------------------

fn check_bounds(sigma_min: f64, sigma_max: f64) -> Result<(), RateError> {
    if !(sigma_min > 0.0) || !(sigma_min <= sigma_max) || !sigma_max.is_finite() {
        return Err(RateError::InvalidBounds(sigma_min, sigma_max));
    }
    Ok(())
}

/// `θ* = min(σ_min, 4/σ_max)`.
pub fn theta_star(sigma_min: f64, sigma_max: f64) -> Result<f64, RateError> {
    check_bounds(sigma_min, sigma_max)?;
    Ok(sigma_min.min(4.0 / sigma_max))
}

/// First branch of `α*`, used when `σ_min < 4/σ_max`.
pub fn alpha_star_branch1(sigma_min: f64, sigma_max: f64) -> f64 {
    let root = guarded_sqrt(4.0 - sigma_min * sigma_min);
    sigma_min * (4.0 + 2.0 * root - sigma_min * sigma_max)
        / (4.0 + 2.0 * root - sigma_min * sigma_min)
}

/// Second branch of `α*`, used when `σ_min ≥ 4/σ_max`.
pub fn alpha_star_branch2(sigma_max: f64) -> f64 {
    sigma_max - guarded_sqrt(sigma_max * sigma_max - 4.0)
}

/// Guaranteed entropy decay rate `α*(σ_min, σ_max)` for non-constant `σ`.
pub fn alpha_star(sigma_min: f64, sigma_max: f64) -> Result<f64, RateError> {
    check_bounds(sigma_min, sigma_max)?;
    if !(sigma_min < sigma_max) {
        return Err(RateError::NotStrictlyVarying(sigma_min, sigma_max));
    }
    Ok(if sigma_min < 4.0 / sigma_max {
        alpha_star_branch1(sigma_min, sigma_max)
    } else {
        alpha_star_branch2(sigma_max)
    })
}

/// `(γ_min(θ), γ_max(θ))`: the largest rates compatible with the pointwise
/// condition at `σ_min` resp. `σ_max`.
pub fn gamma_bounds(theta: f64, sigma_min: f64, sigma_max: f64) -> Result<(f64, f64), RateError> {
    if !(theta > 0.0 && theta < 2.0) {
        return Err(RateError::ThetaOutOfRange(theta));
    }
    let r = 2.0 * (4.0 - theta * theta).sqrt();
    let q = 4.0 - theta * theta;
    let g_min = theta * (r - (4.0 - sigma_min * theta)) / (r - q);
    let g_max = theta * (r + (4.0 - sigma_max * theta)) / (r + q);
    Ok((g_min, g_max))
}

/// `RateReport` for the perturbative theorem with `(θ*, α*)`.
pub fn perturbative_rate(profile: &RelaxationProfile) -> Result<RateReport, RateError> {
    let (lo, hi) = (profile.sigma_min(), profile.sigma_max());
    let theta = theta_star(lo, hi)?;
    Ok(RateReport {
        theta: Some(theta),
        rate: alpha_star(lo, hi)?,
        prefactor: Some(equivalence_prefactor(theta)),
        source: RateSource::PerturbativeThm,
    })
}

// --------------------------------------------------------------------------
// Condition verdicts
// --------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    /// Parameters outside the range the theorem is stated for.
    ParameterRange,
    /// Two-velocity: `α < θ`.
    AlphaBelowTheta,
    /// Two-velocity: `θ + α < 2σ_min`.
    ThetaAlphaBelowTwiceSigmaMin,
    /// Two-velocity pointwise quadratic condition.
    PointwiseQuadratic,
    /// Three-velocity: `√(2/3)θ + α < 2σ_min`.
    ThreeVelocityStrict,
    /// Three-velocity: `α ≤ √(2/3)θ`.
    ThreeVelocityAlphaBound,
    /// Three-velocity supremum condition.
    ThreeVelocitySupremum,
}

/// One violated inequality with its violation amount (`lhs − rhs`, > 0).
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionFailure {
    pub condition: Condition,
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ConditionVerdict {
    pub failures: Vec<ConditionFailure>,
}

impl ConditionVerdict {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failed(&self, c: Condition) -> bool {
        self.failures.iter().any(|f| f.condition == c)
    }

    fn strict(&mut self, condition: Condition, lhs: f64, rhs: f64) {
        if !(lhs < rhs) {
            self.failures.push(ConditionFailure {
                condition,
                excess: lhs - rhs,
            });
        }
    }

    fn non_strict(&mut self, condition: Condition, lhs: f64, rhs: f64) {
        if !(lhs <= rhs + CONDITION_TOL * (1.0 + rhs.abs())) {
            self.failures.push(ConditionFailure {
                condition,
                excess: lhs - rhs,
            });
        }
    }
}

impl fmt::Display for ConditionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.holds() {
            return write!(f, "all conditions hold");
        }
        let parts: Vec<String> = self
            .failures
            .iter()
            .map(|x| format!("{:?} violated by {:.3e}", x.condition, x.excess))
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// `θ²(y−α)² − 4(θ−α)(2y−θ−α)`, convex in `y`.
fn pointwise_quadratic(theta: f64, alpha: f64, y: f64) -> f64 {
    theta * theta * (y - alpha).powi(2) - 4.0 * (theta - alpha) * (2.0 * y - theta - alpha)
}

/// Conditions of the perturbative two-velocity theorem for `(θ, α)`.
pub fn check_conditions_2v(theta: f64, alpha: f64, sigma: &RelaxationProfile) -> ConditionVerdict {
    let mut v = ConditionVerdict::default();
    if !(theta > 0.0 && theta < 2.0 && alpha > 0.0 && alpha < 2.0) {
        v.failures.push(ConditionFailure {
            condition: Condition::ParameterRange,
            excess: f64::NAN,
        });
        return v;
    }
    v.strict(Condition::AlphaBelowTheta, alpha, theta);
    v.strict(
        Condition::ThetaAlphaBelowTwiceSigmaMin,
        theta + alpha,
        2.0 * sigma.sigma_min(),
    );
    let sup = sigma
        .probe_values()
        .into_iter()
        .map(|y| pointwise_quadratic(theta, alpha, y))
        .fold(f64::NEG_INFINITY, f64::max);
    v.non_strict(Condition::PointwiseQuadratic, sup, 0.0);
    v
}

const SQRT_TWO_THIRDS: f64 = 0.816_496_580_927_726;

/// Explicit three-velocity rate `α = min(σ_min/2, 3σ_min/(9σ_max²+1))`, `θ = √6 α`.
pub fn rate_3v(sigma_min: f64, sigma_max: f64) -> Result<RateReport, RateError> {
    check_bounds(sigma_min, sigma_max)?;
    let alpha = (sigma_min / 2.0).min(3.0 * sigma_min / (9.0 * sigma_max * sigma_max + 1.0));
    let theta = 6f64.sqrt() * alpha;
    Ok(RateReport {
        theta: Some(theta),
        rate: alpha,
        prefactor: Some(equivalence_prefactor(theta)),
        source: RateSource::ThreeVelocityCor,
    })
}

/// Conditions of the three-velocity theorem. Suprema are taken over the
/// extremes and every piece value or sample of the profile.
pub fn check_conditions_3v(theta: f64, alpha: f64, sigma: &RelaxationProfile) -> ConditionVerdict {
    let mut v = ConditionVerdict::default();
    if !(theta > 0.0 && alpha > 0.0) {
        v.failures.push(ConditionFailure {
            condition: Condition::ParameterRange,
            excess: f64::NAN,
        });
        return v;
    }
    let s = SQRT_TWO_THIRDS * theta;
    v.strict(
        Condition::ThreeVelocityStrict,
        s + alpha,
        2.0 * sigma.sigma_min(),
    );
    v.non_strict(Condition::ThreeVelocityAlphaBound, alpha, s);
    if v.failed(Condition::ThreeVelocityStrict) {
        // denominators below are not positive; the supremum is meaningless
        return v;
    }
    let probes = sigma.probe_values();
    let first = probes
        .iter()
        .map(|&y| theta * theta * (y - alpha).powi(2) / (8.0 * y - 4.0 * s - 4.0 * alpha))
        .fold(f64::NEG_INFINITY, f64::max);
    let second = probes
        .iter()
        .map(|&y| theta * theta / (12.0 * (2.0 * y - alpha)))
        .fold(f64::NEG_INFINITY, f64::max);
    v.non_strict(Condition::ThreeVelocitySupremum, first + second, s - alpha);
    v
}
