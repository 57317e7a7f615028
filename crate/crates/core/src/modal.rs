//! Fourier-side analysis of the constant-`σ` two-velocity system.
//!
//! Mode `k` evolves by `ẏ = −C_k y` with `C_k = [[0, ik], [ik, σ]]`. A
//! Hermitian `P` with `C*P + PC ≥ 2μP` gives the modal decay `e^{−μt}` in
//! the `P`-norm.

use std::io::{self, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::rates::mu;

/// `|σ/2 − |k||` below this is treated as the defective double eigenvalue.
pub const DEFECTIVE_TOL: f64 = 1e-12;
/// Reports warn when `σ/2` is this close to an integer without being defective.
pub const NEAR_DEFECTIVE_TOL: f64 = 1e-6;

type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModalError {
    #[error("mode k = 0 has no twist matrix")]
    ZeroMode,
    #[error("sigma = 2 requires epsilon in (0, 1), got {0:?}")]
    EpsilonRequired(Option<f64>),
    #[error("epsilon is only meaningful for sigma = 2 (got sigma = {0})")]
    UnexpectedEpsilon(f64),
    #[error("relaxation rate must be positive, got {0}")]
    NonPositiveSigma(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModalMatrix {
    pub entries: Mat2,
    pub k: i64,
    pub sigma: f64,
}

impl ModalMatrix {
    pub fn trace(&self) -> Complex64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn det(&self) -> Complex64 {
        det(&self.entries)
    }
}

/// `C_k = [[0, ik], [ik, σ]]`.
pub fn c_matrix(k: i64, sigma: f64) -> ModalMatrix {
    let ik = Complex64::new(0.0, k as f64);
    ModalMatrix {
        entries: [[ZERO, ik], [ik, Complex64::new(sigma, 0.0)]],
        k,
        sigma,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModalEigenvalues {
    /// Smaller real part (then smaller imaginary part) first.
    pub minus: Complex64,
    pub plus: Complex64,
    pub defective: bool,
}

/// `λ± = σ/2 ± sqrt(σ²/4 − k²)`.
pub fn eigenvalues(k: i64, sigma: f64) -> ModalEigenvalues {
    let half = sigma / 2.0;
    let kk = k.unsigned_abs() as f64;
    let disc = half * half - kk * kk;
    let defective = k != 0 && (half - kk).abs() <= DEFECTIVE_TOL;
    let (minus, plus) = if defective {
        (Complex64::new(half, 0.0), Complex64::new(half, 0.0))
    } else if disc >= 0.0 {
        let r = disc.sqrt();
        (Complex64::new(half - r, 0.0), Complex64::new(half + r, 0.0))
    } else {
        let r = (-disc).sqrt();
        (Complex64::new(half, -r), Complex64::new(half, r))
    };
    ModalEigenvalues {
        minus,
        plus,
        defective,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CaseTag {
    CaseI,
    CaseII(f64),
    CaseIII,
    Suff,
    SuffEps(f64),
}

impl CaseTag {
    pub fn label(&self) -> String {
        match self {
            CaseTag::CaseI => "CaseI".into(),
            CaseTag::CaseII(e) => format!("CaseII({e})"),
            CaseTag::CaseIII => "CaseIII".into(),
            CaseTag::Suff => "Suff".into(),
            CaseTag::SuffEps(e) => format!("SuffEps({e})"),
        }
    }
}

/// Hermitian, unit-diagonal `P = [[1, a], [ā, 1]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwistMatrix {
    pub entries: Mat2,
    pub case_tag: CaseTag,
}

impl TwistMatrix {
    fn from_offdiag(a: Complex64, case_tag: CaseTag) -> Self {
        Self {
            entries: [[ONE, a], [a.conj(), ONE]],
            case_tag,
        }
    }

    pub fn offdiag(&self) -> Complex64 {
        self.entries[0][1]
    }

    /// Eigenvalues `1 ∓ |a|`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let a = self.offdiag().norm();
        (1.0 - a, 1.0 + a)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..2).all(|i| (0..2).all(|j| (self.entries[i][j] - self.entries[j][i].conj()).norm() <= tol))
    }

    /// `P^{-1/2}` in closed form: `P = I + |a| J` with `J² = I`.
    pub fn inv_sqrt(&self) -> Mat2 {
        let a = self.offdiag();
        let m = a.norm();
        if m == 0.0 {
            return [[ONE, ZERO], [ZERO, ONE]];
        }
        let cp = 1.0 / (1.0 + m).sqrt();
        let cm = 1.0 / (1.0 - m).sqrt();
        let d = Complex64::new((cp + cm) / 2.0, 0.0);
        let o = (cp - cm) / 2.0;
        let u = a / m;
        [[d, u * o], [u.conj() * o, d]]
    }

    /// `x* P x`.
    pub fn quadratic_form(&self, x: [Complex64; 2]) -> f64 {
        let px = mat_vec(&self.entries, x);
        (x[0].conj() * px[0] + x[1].conj() * px[1]).re
    }
}

fn twist_offdiag(k: i64, magnitude: f64) -> Complex64 {
    // P12 = −i·sgn(k)·magnitude
    Complex64::new(0.0, -(k.signum() as f64) * magnitude)
}

fn nonzero(k: i64) -> Result<(), ModalError> {
    if k == 0 {
        Err(ModalError::ZeroMode)
    } else {
        Ok(())
    }
}

/// Overdamped low modes: off-diagonal `∓2ki/σ`.
pub fn p_case_i(k: i64, sigma: f64) -> Result<TwistMatrix, ModalError> {
    nonzero(k)?;
    Ok(TwistMatrix::from_offdiag(
        Complex64::new(0.0, -2.0 * k as f64 / sigma),
        CaseTag::CaseI,
    ))
}

/// Defective modes `k = ±1` at `σ = 2`: off-diagonal `∓i(2−ε²)/(2+ε²)`.
pub fn p_case_ii(k: i64, eps: f64) -> Result<TwistMatrix, ModalError> {
    nonzero(k)?;
    Ok(TwistMatrix::from_offdiag(
        twist_offdiag(k, eps_weight(eps)),
        CaseTag::CaseII(eps),
    ))
}

/// Underdamped modes: off-diagonal `∓iσ/(2k)`.
pub fn p_case_iii(k: i64, sigma: f64) -> Result<TwistMatrix, ModalError> {
    nonzero(k)?;
    Ok(TwistMatrix::from_offdiag(
        Complex64::new(0.0, -sigma / (2.0 * k as f64)),
        CaseTag::CaseIII,
    ))
}

/// `P^{(III)}` with `σ → 4/σ`.
pub fn p_suff(k: i64, sigma: f64) -> Result<TwistMatrix, ModalError> {
    let mut p = p_case_iii(k, 4.0 / sigma)?;
    p.case_tag = CaseTag::Suff;
    Ok(p)
}

/// `P^{(III)}` with `σ → 2(2−ε²)/(2+ε²)`.
pub fn p_suff_eps(k: i64, eps: f64) -> Result<TwistMatrix, ModalError> {
    let mut p = p_case_iii(k, 2.0 * eps_weight(eps))?;
    p.case_tag = CaseTag::SuffEps(eps);
    Ok(p)
}

fn eps_weight(eps: f64) -> f64 {
    (2.0 - eps * eps) / (2.0 + eps * eps)
}

fn check_sigma_eps(sigma: f64, eps: Option<f64>) -> Result<Option<f64>, ModalError> {
    if !(sigma > 0.0) {
        return Err(ModalError::NonPositiveSigma(sigma));
    }
    if (sigma - 2.0).abs() <= DEFECTIVE_TOL {
        match eps {
            Some(e) if e > 0.0 && e < 1.0 => Ok(Some(e)),
            other => Err(ModalError::EpsilonRequired(other)),
        }
    } else if eps.is_some() {
        Err(ModalError::UnexpectedEpsilon(sigma))
    } else {
        Ok(None)
    }
}

/// The twist used for the uniform-in-`k` estimate: `P^{(III)}` for `σ < 2`,
/// `P^{suff}` for `σ > 2`, `P^{suff}_ε` at `σ = 2`.
pub fn p_matrix(k: i64, sigma: f64, eps: Option<f64>) -> Result<TwistMatrix, ModalError> {
    nonzero(k)?;
    match check_sigma_eps(sigma, eps)? {
        Some(e) => p_suff_eps(k, e),
        None if sigma < 2.0 => p_case_iii(k, sigma),
        None => p_suff(k, sigma),
    }
}

/// Largest `μ` with `C_k*P + PC_k ≥ 2μP` for a given twist.
pub fn lyapunov_gap_for(k: i64, sigma: f64, p: &TwistMatrix) -> f64 {
    let c = c_matrix(k, sigma).entries;
    let pe = p.entries;
    let lhs = add(&mul(&adjoint(&c), &pe), &mul(&pe, &c));
    let r = p.inv_sqrt();
    let m = mul(&mul(&r, &lhs), &r);
    hermitian_min_eig(&m) / 2.0
}

/// `lyapunov_gap_for` with the twist selected by `p_matrix`.
pub fn lyapunov_gap(k: i64, sigma: f64, eps: Option<f64>) -> Result<f64, ModalError> {
    let p = p_matrix(k, sigma, eps)?;
    Ok(lyapunov_gap_for(k, sigma, &p))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralGap {
    pub mu: f64,
    /// Some mode has a double eigenvalue (`σ = 2|k|`).
    pub defective: bool,
}

/// `min_{k≠0} Re λ_{−,k}`: attained at `k = 1` in closed form.
pub fn spectral_gap(sigma: f64) -> SpectralGap {
    let half = sigma / 2.0;
    let defective = half >= 1.0 - DEFECTIVE_TOL && (half - half.round()).abs() <= DEFECTIVE_TOL;
    SpectralGap {
        mu: mu(sigma),
        defective,
    }
}

/// One row of the modal report.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalRow {
    pub k: i64,
    pub eigenvalues: ModalEigenvalues,
    pub lyapunov_gap: f64,
    pub case_tag: CaseTag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModalReport {
    pub sigma: f64,
    pub eps: Option<f64>,
    pub rows: Vec<ModalRow>,
    pub warnings: Vec<String>,
}

/// Modes `k = 1..=k_max`.
pub fn modal_report(sigma: f64, eps: Option<f64>, k_max: i64) -> Result<ModalReport, ModalError> {
    check_sigma_eps(sigma, eps)?;
    let mut rows = Vec::with_capacity(k_max.max(0) as usize);
    let mut warnings = Vec::new();
    for k in 1..=k_max {
        let p = p_matrix(k, sigma, eps)?;
        let dist = (sigma / 2.0 - k as f64).abs();
        if dist > DEFECTIVE_TOL && dist < NEAR_DEFECTIVE_TOL {
            warnings.push(format!(
                "mode {k}: sigma/2 is within {dist:.1e} of k, eigenvectors are ill-conditioned"
            ));
        }
        rows.push(ModalRow {
            k,
            eigenvalues: eigenvalues(k, sigma),
            lyapunov_gap: lyapunov_gap_for(k, sigma, &p),
            case_tag: p.case_tag,
        });
    }
    Ok(ModalReport {
        sigma,
        eps,
        rows,
        warnings,
    })
}

impl ModalReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "k,re_lambda_minus,im_lambda_minus,re_lambda_plus,im_lambda_plus,lyapunov_gap,case_tag"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.k,
                r.eigenvalues.minus.re,
                r.eigenvalues.minus.im,
                r.eigenvalues.plus.re,
                r.eigenvalues.plus.im,
                r.lyapunov_gap,
                r.case_tag.label()
            )?;
        }
        Ok(())
    }
}

fn det(m: &Mat2) -> Complex64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

fn adjoint(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

fn mat_vec(a: &Mat2, x: [Complex64; 2]) -> [Complex64; 2] {
    [
        a[0][0] * x[0] + a[0][1] * x[1],
        a[1][0] * x[0] + a[1][1] * x[1],
    ]
}

/// Smallest eigenvalue of a Hermitian 2×2 matrix.
fn hermitian_min_eig(m: &Mat2) -> f64 {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let b = (m[0][1] + m[1][0].conj()) / 2.0;
    (a + d) / 2.0 - (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt()
}
