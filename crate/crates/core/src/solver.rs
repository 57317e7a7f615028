//! Time integration of the two- and three-velocity systems.
//!
//! `SplitExact` is Strang splitting in kinetic variables: exact pointwise
//! relaxation for half a step, exact transport (an index shift, which is why
//! `dt` must be a multiple of the grid spacing), relaxation again.
//! `SpectralRK4` integrates the macroscopic form with spectral derivatives.

use std::io::{self, Write};

use thiserror::Error;

use crate::entropy::{entropy2, entropy3, entropy_evolution_rhs, entropy_evolution_rhs_3v};
use crate::rates::{RateError, RelaxationProfile};
use crate::torus::{GridError, GridFunction};

const SQRT2: f64 = std::f64::consts::SQRT_2;
const SQRT3: f64 = 1.732_050_807_568_877_2;
const SQRT6: f64 = 2.449_489_742_783_178;
const SQRT_TWO_THIRDS: f64 = 0.816_496_580_927_726;
const INV_SQRT_THREE: f64 = 0.577_350_269_189_625_8;

/// `dt/Δx` must be this close to an integer for exact transport.
const SHIFT_TOL: f64 = 1e-9;
/// RK4 is kept inside its imaginary-axis stability interval (`2√2`).
const RK4_CFL: f64 = 2.5;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),
    #[error("final time must be non-negative and finite, got {0}")]
    InvalidFinalTime(f64),
    #[error("exact transport needs dt to be a positive integer multiple of dx = {dx}; dt = {dt} is {ratio} cells")]
    ShiftViolation { dt: f64, dx: f64, ratio: f64 },
    #[error("non-finite values at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    SplitExact,
    SpectralRK4,
}

// --------------------------------------------------------------------------
// States and changes of variables
// --------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct MacroState2V {
    pub u: GridFunction,
    pub v: GridFunction,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KineticState2V {
    pub f_plus: GridFunction,
    pub f_minus: GridFunction,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MacroState3V {
    pub u1: GridFunction,
    pub u2: GridFunction,
    pub u3: GridFunction,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KineticState3V {
    pub f1: GridFunction,
    pub f2: GridFunction,
    pub f3: GridFunction,
    pub t: f64,
}

/// Rows of the orthogonal map `f ↦ u`.
pub const TRANSFORM_3V: [[f64; 3]; 3] = [
    [1.0 / SQRT3, 1.0 / SQRT3, 1.0 / SQRT3],
    [1.0 / SQRT2, 0.0, -1.0 / SQRT2],
    [1.0 / SQRT6, -2.0 / SQRT6, 1.0 / SQRT6],
];

impl MacroState2V {
    pub fn new(u: GridFunction, v: GridFunction) -> Result<Self, GridError> {
        u.ensure_same_grid(&v)?;
        Ok(Self { u, v, t: 0.0 })
    }

    pub fn to_kinetic(&self) -> KineticState2V {
        let half = |a: f64, b: f64| 0.5 * (a + b);
        KineticState2V {
            f_plus: self.u.zip_with(&self.v, half).expect("same grid"),
            f_minus: self.u.zip_with(&self.v, |a, b| 0.5 * (a - b)).expect("same grid"),
            t: self.t,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `‖u − u_avg‖² + ‖v‖²`, the squared distance to equilibrium.
    pub fn distance_sq(&self) -> f64 {
        self.u.shift(-self.u.average()).norm_sq() + self.v.norm_sq()
    }

    pub fn all_finite(&self) -> bool {
        self.u.all_finite() && self.v.all_finite()
    }
}

impl KineticState2V {
    pub fn new(f_plus: GridFunction, f_minus: GridFunction) -> Result<Self, GridError> {
        f_plus.ensure_same_grid(&f_minus)?;
        Ok(Self {
            f_plus,
            f_minus,
            t: 0.0,
        })
    }

    pub fn to_macro(&self) -> MacroState2V {
        MacroState2V {
            u: self.f_plus.zip_with(&self.f_minus, |a, b| a + b).expect("same grid"),
            v: self.f_plus.zip_with(&self.f_minus, |a, b| a - b).expect("same grid"),
            t: self.t,
        }
    }
}

fn apply3(m: &[[f64; 3]; 3], a: &GridFunction, b: &GridFunction, c: &GridFunction) -> [GridFunction; 3] {
    let n = a.len();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for j in 0..n {
        let x = [a.samples()[j], b.samples()[j], c.samples()[j]];
        for (i, row) in m.iter().enumerate() {
            out[i][j] = row[0] * x[0] + row[1] * x[1] + row[2] * x[2];
        }
    }
    out.map(|s| GridFunction::new(s).expect("valid resolution"))
}

fn transpose3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

impl MacroState3V {
    pub fn new(u1: GridFunction, u2: GridFunction, u3: GridFunction) -> Result<Self, GridError> {
        u1.ensure_same_grid(&u2)?;
        u1.ensure_same_grid(&u3)?;
        Ok(Self { u1, u2, u3, t: 0.0 })
    }

    pub fn to_kinetic(&self) -> KineticState3V {
        let [f1, f2, f3] = apply3(&transpose3(&TRANSFORM_3V), &self.u1, &self.u2, &self.u3);
        KineticState3V { f1, f2, f3, t: self.t }
    }

    /// `u_∞ = avg(u1)`, the conserved equilibrium value.
    pub fn u_infinity(&self) -> f64 {
        self.u1.average()
    }

    pub fn distance_sq(&self) -> f64 {
        self.u1.shift(-self.u1.average()).norm_sq() + self.u2.norm_sq() + self.u3.norm_sq()
    }

    pub fn all_finite(&self) -> bool {
        self.u1.all_finite() && self.u2.all_finite() && self.u3.all_finite()
    }
}

impl KineticState3V {
    pub fn new(f1: GridFunction, f2: GridFunction, f3: GridFunction) -> Result<Self, GridError> {
        f1.ensure_same_grid(&f2)?;
        f1.ensure_same_grid(&f3)?;
        Ok(Self { f1, f2, f3, t: 0.0 })
    }

    pub fn to_macro(&self) -> MacroState3V {
        let [u1, u2, u3] = apply3(&TRANSFORM_3V, &self.f1, &self.f2, &self.f3);
        MacroState3V { u1, u2, u3, t: self.t }
    }
}

// --------------------------------------------------------------------------
// Run configuration and trajectories
// --------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub t_final: f64,
    pub dt: f64,
    pub scheme: Scheme,
    /// Twist weight of the recorded entropy.
    pub theta: f64,
    /// Record a diagnostics row every this many steps (at least 1).
    pub record_every: usize,
    /// Keep a state snapshot every this many steps.
    pub snapshot_every: Option<usize>,
}

impl RunConfig {
    pub fn new(t_final: f64, dt: f64, theta: f64) -> Self {
        Self {
            t_final,
            dt,
            scheme: Scheme::SplitExact,
            theta,
            record_every: 1,
            snapshot_every: None,
        }
    }

    pub fn scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn record_every(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }

    pub fn snapshot_every(mut self, every: Option<usize>) -> Self {
        self.snapshot_every = every.filter(|&m| m > 0);
        self
    }

    /// Number of steps; the last one ends at or just past `t_final`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    fn validate(&self, n: usize) -> Result<usize, SolverError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(SolverError::InvalidTimeStep(self.dt));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(SolverError::InvalidFinalTime(self.t_final));
        }
        match self.scheme {
            Scheme::SplitExact => shift_cells(self.dt, n),
            Scheme::SpectralRK4 => Ok(0),
        }
    }
}

/// `dt/Δx` as an exact cell count.
pub fn shift_cells(dt: f64, n: usize) -> Result<usize, SolverError> {
    let dx = 2.0 * std::f64::consts::PI / n as f64;
    let ratio = dt / dx;
    let cells = ratio.round();
    if cells < 1.0 || (ratio - cells).abs() > SHIFT_TOL * ratio.max(1.0) {
        return Err(SolverError::ShiftViolation { dt, dx, ratio });
    }
    Ok(cells as usize)
}

/// Diagnostics at one recorded time.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    /// Entropy of the deviation from equilibrium.
    pub entropy: f64,
    pub norm_u_dev: f64,
    /// `‖v‖` (two velocities) or `‖u2‖` (three velocities).
    pub norm_v: f64,
    /// `‖u3‖`, three velocities only.
    pub norm_u3: Option<f64>,
    pub v_avg: f64,
    /// Average of `u` (or `u1`), conserved.
    pub mass: f64,
    /// Exact entropy derivative at `t`.
    pub rhs: f64,
    /// Centered difference of the entropy minus `rhs`; absent at the ends.
    pub residual: Option<f64>,
}

impl DiagnosticRow {
    /// `L²` distance of the macroscopic state to equilibrium.
    pub fn distance(&self) -> f64 {
        (self.norm_u_dev.powi(2) + self.norm_v.powi(2) + self.norm_u3.unwrap_or(0.0).powi(2))
            .sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub rows: Vec<DiagnosticRow>,
    pub final_state: S,
    pub snapshots: Vec<S>,
    pub dt: f64,
}

impl<S> Trajectory<S> {
    pub fn entropy_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, r.entropy)).collect()
    }

    pub fn distance_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, r.distance())).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "t,E_theta,norm_u_dev,norm_v,norm_u3,v_avg,mass,rhs,residual"
        )?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.t,
                r.entropy,
                r.norm_u_dev,
                r.norm_v,
                opt(r.norm_u3),
                r.v_avg,
                r.mass,
                r.rhs,
                opt(r.residual)
            )?;
        }
        Ok(())
    }
}

/// Entropy at every step plus full rows at recorded steps; residuals are
/// filled in once the neighbouring entropies are known.
struct Recorder {
    every: usize,
    dt: f64,
    entropies: Vec<f64>,
    rows: Vec<(usize, DiagnosticRow)>,
}

impl Recorder {
    fn new(every: usize, dt: f64) -> Self {
        Self {
            every,
            dt,
            entropies: Vec::new(),
            rows: Vec::new(),
        }
    }

    fn wants_row(&self, step: usize, last: usize) -> bool {
        step % self.every == 0 || step == last
    }

    fn finish(mut self) -> Vec<DiagnosticRow> {
        let e = &self.entropies;
        for (step, row) in &mut self.rows {
            let s = *step;
            if s > 0 && s + 1 < e.len() {
                let fd = (e[s + 1] - e[s - 1]) / (2.0 * self.dt);
                row.residual = Some(fd - row.rhs);
            }
        }
        self.rows.into_iter().map(|r| r.1).collect()
    }
}

// --------------------------------------------------------------------------
// Two velocities
// --------------------------------------------------------------------------

fn diagnostics_2v(
    s: &MacroState2V,
    sigma: &RelaxationProfile,
    theta: f64,
) -> Result<DiagnosticRow, SolverError> {
    let mass = s.u.average();
    let u_dev = s.u.shift(-mass);
    Ok(DiagnosticRow {
        t: s.t,
        entropy: entropy2(&u_dev, &s.v, theta)?,
        norm_u_dev: u_dev.norm(),
        norm_v: s.v.norm(),
        norm_u3: None,
        v_avg: s.v.average(),
        mass,
        rhs: entropy_evolution_rhs(&s.u, &s.v, sigma, theta)?,
        residual: None,
    })
}

fn entropy_2v(s: &MacroState2V, theta: f64) -> Result<f64, SolverError> {
    Ok(entropy2(&s.u.shift(-s.u.average()), &s.v, theta)?)
}

/// Exact relaxation of the flux: `v ← e^{−σ τ} v`.
fn relax_factors(sigma: &GridFunction, tau: f64) -> Vec<f64> {
    sigma.samples().iter().map(|s| (-s * tau).exp()).collect()
}

fn rotate(src: &[f64], cells: usize, right: bool) -> Vec<f64> {
    let mut out = src.to_vec();
    if right {
        out.rotate_right(cells % src.len());
    } else {
        out.rotate_left(cells % src.len());
    }
    out
}

struct Split2V {
    cells: usize,
    half: Vec<f64>,
}

impl Split2V {
    fn step(&self, fp: &mut Vec<f64>, fm: &mut Vec<f64>) {
        self.relax(fp, fm);
        *fp = rotate(fp, self.cells, true);
        *fm = rotate(fm, self.cells, false);
        self.relax(fp, fm);
    }

    fn relax(&self, fp: &mut [f64], fm: &mut [f64]) {
        for ((a, b), &q) in fp.iter_mut().zip(fm.iter_mut()).zip(&self.half) {
            let m = 0.5 * (*a + *b);
            let d = 0.5 * (*a - *b) * q;
            *a = m + d;
            *b = m - d;
        }
    }
}

fn rk4_substeps(dt: f64, n: usize) -> usize {
    let k_max = (n / 2 - 1) as f64;
    ((dt * k_max / RK4_CFL).ceil() as usize).max(1)
}

fn rk4_2v(u: &GridFunction, v: &GridFunction, sigma: &GridFunction, h: f64) -> (GridFunction, GridFunction) {
    let rhs = |u: &GridFunction, v: &GridFunction| {
        let du = v.derivative().scale(-1.0);
        let dv = u
            .derivative()
            .zip_with(&v.zip_with(sigma, |a, s| a * s).expect("grid"), |a, b| -a - b)
            .expect("grid");
        (du, dv)
    };
    let axpy = |x: &GridFunction, k: &GridFunction, c: f64| x.zip_with(k, |a, b| a + c * b).expect("grid");
    let (k1u, k1v) = rhs(u, v);
    let (k2u, k2v) = rhs(&axpy(u, &k1u, h / 2.0), &axpy(v, &k1v, h / 2.0));
    let (k3u, k3v) = rhs(&axpy(u, &k2u, h / 2.0), &axpy(v, &k2v, h / 2.0));
    let (k4u, k4v) = rhs(&axpy(u, &k3u, h), &axpy(v, &k3v, h));
    let combine = |x: &GridFunction, a: &GridFunction, b: &GridFunction, c: &GridFunction, d: &GridFunction| {
        let n = x.len();
        let s: Vec<f64> = (0..n)
            .map(|j| {
                x.samples()[j]
                    + h / 6.0
                        * (a.samples()[j] + 2.0 * b.samples()[j] + 2.0 * c.samples()[j] + d.samples()[j])
            })
            .collect();
        GridFunction::new(s).expect("grid")
    };
    (
        combine(u, &k1u, &k2u, &k3u, &k4u),
        combine(v, &k1v, &k2v, &k3v, &k4v),
    )
}

/// Integrates the two-velocity system from `init` to `cfg.t_final`.
pub fn simulate_2v(
    init: &MacroState2V,
    sigma: &RelaxationProfile,
    cfg: &RunConfig,
) -> Result<Trajectory<MacroState2V>, SolverError> {
    let n = init.len();
    init.u.ensure_same_grid(&init.v)?;
    let cells = cfg.validate(n)?;
    let sig = sigma.sample(n)?;
    let steps = cfg.steps();
    let mut rec = Recorder::new(cfg.record_every.max(1), cfg.dt);
    let mut snapshots = Vec::new();

    let mut state = init.clone();
    let split = Split2V {
        cells,
        half: relax_factors(&sig, cfg.dt / 2.0),
    };
    let subs = rk4_substeps(cfg.dt, n);

    for step in 0..=steps {
        if step > 0 {
            state = match cfg.scheme {
                Scheme::SplitExact => {
                    let k = state.to_kinetic();
                    let mut fp = k.f_plus.into_samples();
                    let mut fm = k.f_minus.into_samples();
                    split.step(&mut fp, &mut fm);
                    KineticState2V {
                        f_plus: GridFunction::new(fp)?,
                        f_minus: GridFunction::new(fm)?,
                        t: 0.0,
                    }
                    .to_macro()
                }
                Scheme::SpectralRK4 => {
                    let (mut u, mut v) = (state.u, state.v);
                    let h = cfg.dt / subs as f64;
                    for _ in 0..subs {
                        (u, v) = rk4_2v(&u, &v, &sig, h);
                    }
                    MacroState2V { u, v, t: 0.0 }
                }
            };
            state.t = init.t + step as f64 * cfg.dt;
            if !state.all_finite() {
                return Err(SolverError::NonFinite { step, t: state.t });
            }
        }
        rec.entropies.push(entropy_2v(&state, cfg.theta)?);
        if rec.wants_row(step, steps) {
            rec.rows.push((step, diagnostics_2v(&state, sigma, cfg.theta)?));
        }
        if cfg.snapshot_every.is_some_and(|m| step % m == 0) {
            snapshots.push(state.clone());
        }
    }
    Ok(Trajectory {
        rows: rec.finish(),
        final_state: state,
        snapshots,
        dt: cfg.dt,
    })
}

// --------------------------------------------------------------------------
// Three velocities
// --------------------------------------------------------------------------

fn diagnostics_3v(
    s: &MacroState3V,
    sigma: &RelaxationProfile,
    theta: f64,
) -> Result<DiagnosticRow, SolverError> {
    let mass = s.u1.average();
    let u_dev = s.u1.shift(-mass);
    Ok(DiagnosticRow {
        t: s.t,
        entropy: entropy3(&u_dev, &s.u2, &s.u3, theta)?,
        norm_u_dev: u_dev.norm(),
        norm_v: s.u2.norm(),
        norm_u3: Some(s.u3.norm()),
        v_avg: s.u2.average(),
        mass,
        rhs: entropy_evolution_rhs_3v(&s.u1, &s.u2, &s.u3, sigma, theta)?,
        residual: None,
    })
}

struct Split3V {
    cells: usize,
    half: Vec<f64>,
}

impl Split3V {
    fn step(&self, f1: &mut Vec<f64>, f2: &mut [f64], f3: &mut Vec<f64>) {
        self.relax(f1, f2, f3);
        *f1 = rotate(f1, self.cells, true);
        *f3 = rotate(f3, self.cells, false);
        self.relax(f1, f2, f3);
    }

    /// Deviations from the pointwise mean decay by the precomputed factor.
    fn relax(&self, f1: &mut [f64], f2: &mut [f64], f3: &mut [f64]) {
        for j in 0..f1.len() {
            let m = (f1[j] + f2[j] + f3[j]) / 3.0;
            let q = self.half[j];
            f1[j] = m + (f1[j] - m) * q;
            f2[j] = m + (f2[j] - m) * q;
            f3[j] = m + (f3[j] - m) * q;
        }
    }
}

fn rk4_3v(
    u: &[GridFunction; 3],
    sigma: &GridFunction,
    h: f64,
) -> [GridFunction; 3] {
    let rhs = |u: &[GridFunction; 3]| -> [Vec<f64>; 3] {
        let d: Vec<GridFunction> = u.iter().map(|g| g.derivative()).collect();
        let n = u[0].len();
        let (d1, d2, d3) = (d[0].samples(), d[1].samples(), d[2].samples());
        let s = sigma.samples();
        let (u2, u3) = (u[1].samples(), u[2].samples());
        [
            (0..n).map(|j| -SQRT_TWO_THIRDS * d2[j]).collect(),
            (0..n)
                .map(|j| -SQRT_TWO_THIRDS * d1[j] - INV_SQRT_THREE * d3[j] - s[j] * u2[j])
                .collect(),
            (0..n).map(|j| -INV_SQRT_THREE * d2[j] - s[j] * u3[j]).collect(),
        ]
    };
    let axpy = |x: &[GridFunction; 3], k: &[Vec<f64>; 3], c: f64| -> [GridFunction; 3] {
        std::array::from_fn(|i| {
            GridFunction::new(
                x[i].samples().iter().zip(&k[i]).map(|(a, b)| a + c * b).collect(),
            )
            .expect("grid")
        })
    };
    let k1 = rhs(u);
    let k2 = rhs(&axpy(u, &k1, h / 2.0));
    let k3 = rhs(&axpy(u, &k2, h / 2.0));
    let k4 = rhs(&axpy(u, &k3, h));
    std::array::from_fn(|i| {
        let x = u[i].samples();
        GridFunction::new(
            (0..x.len())
                .map(|j| x[j] + h / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]))
                .collect(),
        )
        .expect("grid")
    })
}

/// Integrates the three-velocity system; diagnostics use `𝔈_θ`.
pub fn simulate_3v(
    init: &MacroState3V,
    sigma: &RelaxationProfile,
    cfg: &RunConfig,
) -> Result<Trajectory<MacroState3V>, SolverError> {
    let n = init.u1.len();
    init.u1.ensure_same_grid(&init.u2)?;
    init.u1.ensure_same_grid(&init.u3)?;
    let cells = cfg.validate(n)?;
    let sig = sigma.sample(n)?;
    let steps = cfg.steps();
    let mut rec = Recorder::new(cfg.record_every.max(1), cfg.dt);
    let mut snapshots = Vec::new();

    let mut state = init.clone();
    let split = Split3V {
        cells,
        half: relax_factors(&sig, cfg.dt / 2.0),
    };
    let subs = rk4_substeps(cfg.dt, n);

    for step in 0..=steps {
        if step > 0 {
            state = match cfg.scheme {
                Scheme::SplitExact => {
                    let k = state.to_kinetic();
                    let mut f1 = k.f1.into_samples();
                    let mut f2 = k.f2.into_samples();
                    let mut f3 = k.f3.into_samples();
                    split.step(&mut f1, &mut f2, &mut f3);
                    KineticState3V {
                        f1: GridFunction::new(f1)?,
                        f2: GridFunction::new(f2)?,
                        f3: GridFunction::new(f3)?,
                        t: 0.0,
                    }
                    .to_macro()
                }
                Scheme::SpectralRK4 => {
                    let mut u = [state.u1, state.u2, state.u3];
                    let h = cfg.dt / subs as f64;
                    for _ in 0..subs {
                        u = rk4_3v(&u, &sig, h);
                    }
                    let [u1, u2, u3] = u;
                    MacroState3V { u1, u2, u3, t: 0.0 }
                }
            };
            state.t = init.t + step as f64 * cfg.dt;
            if !state.all_finite() {
                return Err(SolverError::NonFinite { step, t: state.t });
            }
        }
        let u_dev = state.u1.shift(-state.u1.average());
        rec.entropies
            .push(entropy3(&u_dev, &state.u2, &state.u3, cfg.theta)?);
        if rec.wants_row(step, steps) {
            rec.rows.push((step, diagnostics_3v(&state, sigma, cfg.theta)?));
        }
        if cfg.snapshot_every.is_some_and(|m| step % m == 0) {
            snapshots.push(state.clone());
        }
    }
    Ok(Trajectory {
        rows: rec.finish(),
        final_state: state,
        snapshots,
        dt: cfg.dt,
    })
}
