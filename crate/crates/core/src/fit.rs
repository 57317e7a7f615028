//! Least-squares exponential rate fits on time series.

use thiserror::Error;

/// Values below this are considered to have hit the floating-point floor.
pub const VALUE_FLOOR: f64 = 1e-12;
pub const MIN_POINTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {MIN_POINTS} usable points in the window, found {0}")]
    TooFewPoints(usize),
    #[error("empty or inverted window [{0}, {1}]")]
    BadWindow(f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    /// `−slope` of `log(value)` against `t`.
    pub rate: f64,
    pub r_squared: f64,
    /// Window actually used after clipping at the floor.
    pub window: (f64, f64),
    pub points: usize,
}

/// Fits `value ≈ C e^{−rate·t}` over `window`. The window is cut at the
/// first value below [`VALUE_FLOOR`].
pub fn fit_decay_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit, FitError> {
    fit_with(series, window, |_, v| v.ln())
}

/// Fits `value ≈ C (1+t) e^{−rate·t}`, the envelope of a defective mode.
pub fn fit_envelope_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit, FitError> {
    fit_with(series, window, |t, v| v.ln() - (1.0 + t).ln())
}

/// Default window `[0.25 T, 0.9 T]`.
pub fn default_window(t_final: f64) -> (f64, f64) {
    (0.25 * t_final, 0.9 * t_final)
}

fn fit_with(
    series: &[(f64, f64)],
    (lo, hi): (f64, f64),
    transform: impl Fn(f64, f64) -> f64,
) -> Result<RateFit, FitError> {
    if !(lo < hi) {
        return Err(FitError::BadWindow(lo, hi));
    }
    let mut pts = Vec::new();
    for &(t, v) in series.iter().filter(|(t, _)| *t >= lo && *t <= hi) {
        if !(v >= VALUE_FLOOR) {
            break;
        }
        pts.push((t, transform(t, v)));
    }
    if pts.len() < MIN_POINTS {
        return Err(FitError::TooFewPoints(pts.len()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in &pts {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sty / stt;
    // a flat series is fitted exactly by slope zero
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * n {
        1.0
    } else {
        sty * sty / (stt * syy)
    };
    Ok(RateFit {
        rate: -slope,
        r_squared,
        window: (pts[0].0, pts[pts.len() - 1].0),
        points: pts.len(),
    })
}
