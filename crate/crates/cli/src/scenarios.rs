//! Named experiments. `prepare` validates everything up front; `run` only
//! computes and returns artifacts, it never touches the file system.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use gtlab::fit::{default_window, fit_decay_rate, fit_envelope_rate};
use gtlab::init::{harmonic, random_macro_2v, random_macro_3v};
use gtlab::modal::{eigenvalues, modal_report, spectral_gap};
use gtlab::poincare::{improved_alpha, weight_from_sigma, weighted_poincare};
use gtlab::rates::{
    check_conditions_2v, check_conditions_3v, constant_rate, format_reports_table, mu,
    perturbative_rate, rate_3v, theta_of_sigma, write_reports_csv, RateReport,
};
use gtlab::solver::{
    simulate_2v, simulate_3v, MacroState2V, MacroState3V, RunConfig, Scheme, Trajectory,
};
use gtlab::telegrapher::bs_rate;
use gtlab::{GridFunction, RelaxationProfile};
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::output::{Artifacts, Check, SummaryRow};
use crate::params::{parse_sigma, parse_sigma_grid, InitArg, Params};
use crate::plot;

/// Per-step entropy increase tolerated as splitting error.
pub const MONOTONE_TOL: f64 = 1e-8;
/// Tolerance for Lyapunov gaps against the spectral gap.
pub const MODAL_TOL: f64 = 1e-10;
const IMPROVED_TOL: f64 = 1e-6;
const IMPROVED_MAX_ITER: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    ConstantSigma,
    PiecewiseSigma,
    ThreeVelocity,
    PoincareTable,
    TelegrapherTable,
    AppendixAComparison,
    ModalReport,
    Rates,
    RateCurve,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::ConstantSigma,
        Scenario::PiecewiseSigma,
        Scenario::ThreeVelocity,
        Scenario::PoincareTable,
        Scenario::TelegrapherTable,
        Scenario::AppendixAComparison,
        Scenario::ModalReport,
        Scenario::Rates,
        Scenario::RateCurve,
    ];
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.to_string().to_lowercase() == key)
            .ok_or_else(|| {
                let names: Vec<String> = Scenario::ALL.iter().map(|s| s.to_string()).collect();
                CliError::invalid("scenario", format!("unknown '{s}', expected one of {}", names.join(", ")))
            })
    }
}

/// A named scenario with its raw parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub name: String,
    pub scenario: Scenario,
    pub params: Params,
}

// --------------------------------------------------------------------------
// Validated jobs
// --------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct Grid {
    n: usize,
    cfg: RunConfig,
}

/// What the simulation is compared against.
#[derive(Clone, Debug)]
struct Theory {
    theta: f64,
    /// Entropy decay rate.
    alpha: f64,
    /// Decay rate of the `L²` distance.
    norm_rate: f64,
    /// Whether the rates are guaranteed; false when user overrides break
    /// the hypotheses.
    asserted: bool,
    /// Defect parameter for `σ = 2`.
    eps: Option<f64>,
    notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Sim {
    sigma: RelaxationProfile,
    grid: Grid,
    theory: Theory,
    init: InitArg,
    seeds: Vec<u64>,
    plots: bool,
}

#[derive(Clone, Debug)]
pub struct TwoPiece {
    sigma: RelaxationProfile,
    theta: f64,
    alpha0: f64,
    /// Verification run for the observed entropy rate.
    check: Option<Sim>,
}

#[derive(Clone, Debug)]
pub enum Job {
    Simulate2V(Sim),
    Simulate3V(Sim),
    Poincare(TwoPiece),
    Telegrapher(TwoPiece),
    Appendix(TwoPiece),
    Modal { sigma: f64, eps: Option<f64>, k_max: i64, plots: bool },
    Rates { sigma: RelaxationProfile, pair: Option<(f64, f64)> },
    RateCurve { lo: f64, hi: f64, points: usize, plots: bool },
}

fn positive(field: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::invalid(field, format!("must be positive, got {x}")))
    }
}

fn resolution(p: &Params, default: usize) -> Result<usize> {
    let n = p.n.unwrap_or(default);
    if n < 8 || n % 2 != 0 {
        return Err(CliError::invalid("n", format!("must be even and at least 8, got {n}")));
    }
    Ok(n)
}

fn grid(p: &Params, n: usize, theta: f64, t_default: f64) -> Result<Grid> {
    let dt = positive("dt", p.dt.unwrap_or(2.0 * PI / n as f64))?;
    let t_final = positive("t-final", p.t_final.unwrap_or(t_default))?;
    let scheme: Scheme = p.scheme.map(Into::into).unwrap_or_default();
    if scheme == Scheme::SplitExact {
        gtlab::solver::shift_cells(dt, n)?;
    }
    let steps = (t_final / dt).ceil();
    if steps > 5e6 {
        return Err(CliError::invalid("t-final", format!("{steps} steps is more than this harness runs")));
    }
    Ok(Grid {
        n,
        cfg: RunConfig::new(t_final, dt, theta).scheme(scheme),
    })
}

fn seeds(p: &Params, init: InitArg) -> Result<Vec<u64>> {
    let trials = p.trials.unwrap_or(1);
    if trials == 0 || trials > 1000 {
        return Err(CliError::invalid("trials", format!("must be in 1..=1000, got {trials}")));
    }
    if trials > 1 && init == InitArg::Mode1 {
        return Err(CliError::invalid("trials", "several trials need init = random"));
    }
    let seed = p.seed.unwrap_or(0);
    Ok((0..trials as u64).map(|i| seed.wrapping_add(i)).collect())
}

fn sigma_of(p: &Params, n: usize, default: &str) -> Result<RelaxationProfile> {
    parse_sigma(p.sigma.as_deref().unwrap_or(default), n)
}

fn two_piece_of(p: &Params) -> Result<RelaxationProfile> {
    let s = sigma_of(p, 8, "pc:1@pi,4@2pi")?;
    if s.two_piece_values().is_none() {
        return Err(CliError::invalid("sigma", "needs two pieces with the jump at pi, e.g. pc:1@pi,4@2pi"));
    }
    Ok(s)
}

fn reject_eps(p: &Params) -> Result<()> {
    match p.eps {
        Some(_) => Err(CliError::invalid("eps", "only used for constant sigma = 2")),
        None => Ok(()),
    }
}

fn theory_2v(p: &Params, sigma: &RelaxationProfile) -> Result<Theory> {
    if sigma.is_constant() {
        let s = sigma.sigma_min();
        let rep = constant_rate(s, p.eps)?;
        if p.theta.is_some() || p.alpha.is_some() {
            return Err(CliError::invalid(
                "theta",
                "constant sigma uses its sharp twist; drop --theta/--alpha",
            ));
        }
        return Ok(Theory {
            theta: rep.theta.unwrap_or_else(|| theta_of_sigma(s)),
            alpha: rep.rate,
            norm_rate: rep.norm_rate(),
            asserted: true,
            eps: p.eps,
            notes: Vec::new(),
        });
    }
    reject_eps(p)?;
    let base = perturbative_rate(sigma)?;
    let theta = p.theta.unwrap_or(base.theta.unwrap_or(0.0));
    let alpha = p.alpha.unwrap_or(base.rate);
    positive("theta", theta)?;
    // α* sits exactly on the boundary of the pointwise condition
    let verdict = check_conditions_2v(theta, alpha * (1.0 - 1e-9), sigma);
    let mut notes = Vec::new();
    if !verdict.holds() {
        notes.push(format!("(theta, alpha) = ({theta}, {alpha}) is not covered: {verdict}"));
    }
    Ok(Theory {
        theta,
        alpha,
        norm_rate: alpha / 2.0,
        asserted: verdict.holds(),
        eps: None,
        notes,
    })
}

fn theory_3v(p: &Params, sigma: &RelaxationProfile) -> Result<Theory> {
    reject_eps(p)?;
    let base = rate_3v(sigma.sigma_min(), sigma.sigma_max())?;
    let alpha = p.alpha.unwrap_or(base.rate);
    let theta = p.theta.unwrap_or_else(|| 6f64.sqrt() * alpha);
    positive("alpha", alpha)?;
    positive("theta", theta)?;
    let verdict = check_conditions_3v(theta, alpha, sigma);
    let mut notes = Vec::new();
    if !verdict.holds() {
        notes.push(format!("(theta, alpha) = ({theta}, {alpha}) is not covered: {verdict}"));
    }
    Ok(Theory {
        theta,
        alpha,
        norm_rate: alpha / 2.0,
        asserted: verdict.holds(),
        eps: None,
        notes,
    })
}

/// Random-data run that supplies the observed entropy rate for a two-piece table.
fn verification_sim(p: &Params, sigma: &RelaxationProfile, theta: f64, alpha: f64) -> Result<Option<Sim>> {
    if p.t_final == Some(0.0) {
        return Ok(None);
    }
    let n = resolution(p, 128)?;
    Ok(Some(Sim {
        sigma: sigma.clone(),
        grid: grid(p, n, theta, 8.0 * PI)?,
        theory: Theory {
            theta,
            alpha,
            norm_rate: alpha / 2.0,
            asserted: true,
            eps: None,
            notes: Vec::new(),
        },
        init: InitArg::Random,
        seeds: seeds(p, InitArg::Random)?,
        plots: false,
    }))
}

fn two_piece_job(p: &Params) -> Result<TwoPiece> {
    reject_eps(p)?;
    let sigma = two_piece_of(p)?;
    let base = perturbative_rate(&sigma)?;
    let theta = positive("theta", p.theta.unwrap_or(base.theta.unwrap_or(0.0)))?;
    let alpha0 = positive("alpha", p.alpha.unwrap_or(base.rate))?;
    // fail early on an inadmissible start rather than after the other jobs ran
    let w = weight_from_sigma(&sigma, theta, alpha0)?;
    let c2 = weighted_poincare(&w, None, None)?.c_omega_sq;
    let bound = theta - theta * theta * c2 / 4.0;
    if alpha0 > bound {
        return Err(CliError::invalid(
            "alpha",
            format!("alpha = {alpha0} is not admissible: need alpha <= {bound}"),
        ));
    }
    let check = verification_sim(p, &sigma, theta, alpha0)?;
    Ok(TwoPiece {
        sigma,
        theta,
        alpha0,
        check,
    })
}

/// Validates `exp` completely; nothing is computed beyond cheap checks.
pub fn prepare(exp: &Experiment) -> Result<Job> {
    let p = &exp.params;
    let plots = !p.no_plots;
    match exp.scenario {
        Scenario::ConstantSigma | Scenario::PiecewiseSigma => {
            let n = resolution(p, 256)?;
            let default = if exp.scenario == Scenario::ConstantSigma {
                "const:1"
            } else {
                "pc:1@pi,4@2pi"
            };
            let sigma = sigma_of(p, n, default)?;
            let theory = theory_2v(p, &sigma)?;
            let init = p.init.unwrap_or(if sigma.is_constant() {
                InitArg::Mode1
            } else {
                InitArg::Random
            });
            Ok(Job::Simulate2V(Sim {
                grid: grid(p, n, theory.theta, 30.0)?,
                seeds: seeds(p, init)?,
                sigma,
                theory,
                init,
                plots,
            }))
        }
        Scenario::ThreeVelocity => {
            let n = resolution(p, 128)?;
            let sigma = sigma_of(p, n, "const:1")?;
            let theory = theory_3v(p, &sigma)?;
            let init = p.init.unwrap_or(InitArg::Random);
            Ok(Job::Simulate3V(Sim {
                grid: grid(p, n, theory.theta, 20.0)?,
                seeds: seeds(p, init)?,
                sigma,
                theory,
                init,
                plots,
            }))
        }
        Scenario::PoincareTable => Ok(Job::Poincare(two_piece_job(p)?)),
        Scenario::TelegrapherTable => Ok(Job::Telegrapher(two_piece_job(p)?)),
        Scenario::AppendixAComparison => Ok(Job::Appendix(two_piece_job(p)?)),
        Scenario::ModalReport => {
            let sigma = sigma_of(p, 8, "const:1")?;
            if !sigma.is_constant() {
                return Err(CliError::invalid("sigma", "modal analysis needs a constant sigma"));
            }
            let k_max = p.k_max.unwrap_or(50);
            if !(1..=100_000).contains(&k_max) {
                return Err(CliError::invalid("k-max", format!("must be in 1..=100000, got {k_max}")));
            }
            constant_rate(sigma.sigma_min(), p.eps)?;
            Ok(Job::Modal {
                sigma: sigma.sigma_min(),
                eps: p.eps,
                k_max,
                plots,
            })
        }
        Scenario::Rates => {
            let sigma = sigma_of(p, resolution(p, 256)?, "const:1")?;
            if sigma.is_constant() {
                constant_rate(sigma.sigma_min(), p.eps)?;
            } else {
                reject_eps(p)?;
            }
            let pair = match (p.theta, p.alpha) {
                (Some(t), Some(a)) => Some((t, a)),
                (None, None) => None,
                _ => return Err(CliError::invalid("alpha", "give --theta and --alpha together")),
            };
            Ok(Job::Rates { sigma, pair })
        }
        Scenario::RateCurve => {
            let (lo, hi, points) = parse_sigma_grid(p.sigma_grid.as_deref().unwrap_or("0.1,10,200"))?;
            if points > 1_000_000 {
                return Err(CliError::invalid("sigma-grid", "at most 10^6 points"));
            }
            Ok(Job::RateCurve { lo, hi, points, plots })
        }
    }
}

// --------------------------------------------------------------------------
// Execution
// --------------------------------------------------------------------------

impl Job {
    pub fn run(&self) -> Result<Artifacts> {
        let mut art = Artifacts::default();
        match self {
            Job::Simulate2V(sim) => run_2v(sim, &mut art)?,
            Job::Simulate3V(sim) => run_3v(sim, &mut art)?,
            Job::Poincare(tp) => {
                poincare_table(tp, &mut art)?;
                observed_rows(tp, &mut art, &[("alpha_max", None)])?;
            }
            Job::Telegrapher(tp) => {
                telegrapher_table(tp, &mut art)?;
                observed_rows(tp, &mut art, &[("alpha_bs", None)])?;
            }
            Job::Appendix(tp) => appendix(tp, &mut art)?,
            Job::Modal { sigma, eps, k_max, plots } => modal(*sigma, *eps, *k_max, *plots, &mut art)?,
            Job::Rates { sigma, pair } => rates(sigma, *pair, &mut art)?,
            Job::RateCurve { lo, hi, points, plots } => rate_curve(*lo, *hi, *points, *plots, &mut art)?,
        }
        art.finish_summary();
        Ok(art)
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn add_plot(art: &mut Artifacts, name: &str, svg: std::result::Result<String, String>) {
    match svg {
        Ok(s) => art.add(name, s),
        Err(e) => {
            let _ = writeln!(art.report, "warning: {name} skipped ({e})");
        }
    }
}

fn initial_2v(sim: &Sim, seed: u64) -> Result<MacroState2V> {
    let n = sim.grid.n;
    let (u, v) = match sim.init {
        InitArg::Mode1 => (GridFunction::zeros(n)?, harmonic(n, 1, 1.0, 0.0)?),
        InitArg::Random => random_macro_2v(n, seed)?,
    };
    Ok(MacroState2V::new(u, v)?)
}

fn initial_3v(sim: &Sim, seed: u64) -> Result<MacroState3V> {
    let n = sim.grid.n;
    let (u1, u2, u3) = match sim.init {
        InitArg::Mode1 => (GridFunction::zeros(n)?, harmonic(n, 1, 1.0, 0.0)?, GridFunction::zeros(n)?),
        InitArg::Random => random_macro_3v(n, seed)?,
    };
    Ok(MacroState3V::new(u1, u2, u3)?)
}

/// Fitted rates and the worst entropy increase of one trajectory.
#[derive(Clone, Copy, Debug)]
struct Observed {
    entropy_rate: f64,
    norm_rate: f64,
    envelope_rate: Option<f64>,
    max_increase: f64,
}

fn observe<S>(traj: &Trajectory<S>, t_final: f64, envelope: bool) -> Result<Observed> {
    let window = default_window(t_final);
    let e = traj.entropy_series();
    let d = traj.distance_series();
    let max_increase = e
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Observed {
        entropy_rate: fit_decay_rate(&e, window)?.rate,
        norm_rate: fit_decay_rate(&d, window)?.rate,
        envelope_rate: if envelope { Some(fit_envelope_rate(&d, window)?.rate) } else { None },
        max_increase,
    })
}

fn trajectory_name(sim: &Sim, seed: u64) -> String {
    if sim.seeds.len() > 1 {
        format!("trajectory_seed{seed}.csv")
    } else {
        "trajectory.csv".into()
    }
}

fn summarize_sim(sim: &Sim, obs: &[Observed], art: &mut Artifacts) {
    let th = &sim.theory;
    let worst = |f: fn(&Observed) -> f64| obs.iter().map(f).fold(f64::INFINITY, f64::min);
    let check = |row: SummaryRow| {
        if th.asserted {
            row
        } else {
            SummaryRow { check: Check::Info, ..row }
        }
    };
    art.summary.push(check(SummaryRow::rate("entropy_rate", th.alpha, Some(worst(|o| o.entropy_rate)))));
    art.summary.push(check(SummaryRow::rate("norm_rate", th.norm_rate, Some(worst(|o| o.norm_rate)))));
    if let Some(env) = obs.iter().filter_map(|o| o.envelope_rate).reduce(f64::min) {
        // the defective mode decays like (1+t)e^{-t}
        art.summary.push(SummaryRow::rate("envelope_rate", 1.0, Some(env)));
    }
    let inc = obs.iter().map(|o| o.max_increase).fold(f64::NEG_INFINITY, f64::max);
    art.summary.push(check(SummaryRow::new(
        "max_entropy_increase",
        0.0,
        Some(inc),
        Check::AtMost(MONOTONE_TOL),
    )));
    for n in &th.notes {
        let _ = writeln!(art.report, "note: {n}");
    }
}

fn entropy_plot(title: &str, series: Vec<(String, Vec<(f64, f64)>)>, art: &mut Artifacts) {
    add_plot(art, "entropy.svg", plot::semilog(title, "E_theta", &series));
}

fn run_2v(sim: &Sim, art: &mut Artifacts) -> Result<()> {
    let cfg = &sim.grid.cfg;
    let envelope = sim.theory.eps.is_some();
    let runs: Vec<Result<(u64, Trajectory<MacroState2V>)>> = sim
        .seeds
        .par_iter()
        .map(|&seed| Ok((seed, simulate_2v(&initial_2v(sim, seed)?, &sim.sigma, cfg)?)))
        .collect();
    let mut obs = Vec::new();
    let mut series = Vec::new();
    for r in runs {
        let (seed, traj) = r?;
        art.add(trajectory_name(sim, seed), csv_bytes(|b| traj.write_csv(b))?);
        obs.push(observe(&traj, cfg.t_final, envelope)?);
        if series.len() < 6 {
            series.push((format!("seed {seed}"), traj.entropy_series()));
        }
    }
    let _ = writeln!(
        art.report,
        "two velocities: sigma = {}, N = {}, dt = {}, T = {}, theta = {}",
        sim.sigma, sim.grid.n, cfg.dt, cfg.t_final, sim.theory.theta
    );
    summarize_sim(sim, &obs, art);
    if sim.plots {
        entropy_plot(&format!("entropy decay, sigma = {}", sim.sigma), series, art);
        if sim.sigma.is_constant() {
            eigen_plot(sim.sigma.sigma_min(), 20, art);
        }
    }
    Ok(())
}

fn run_3v(sim: &Sim, art: &mut Artifacts) -> Result<()> {
    let cfg = &sim.grid.cfg;
    let runs: Vec<Result<(u64, Trajectory<MacroState3V>)>> = sim
        .seeds
        .par_iter()
        .map(|&seed| Ok((seed, simulate_3v(&initial_3v(sim, seed)?, &sim.sigma, cfg)?)))
        .collect();
    let mut obs = Vec::new();
    let mut series = Vec::new();
    for r in runs {
        let (seed, traj) = r?;
        art.add(trajectory_name(sim, seed), csv_bytes(|b| traj.write_csv(b))?);
        obs.push(observe(&traj, cfg.t_final, false)?);
        let last = traj.rows.last().map(|r| r.distance()).unwrap_or(f64::NAN);
        let _ = writeln!(
            art.report,
            "seed {seed}: u_inf = {}, final distance to equilibrium = {last:.3e}",
            traj.final_state.u_infinity()
        );
        if series.len() < 6 {
            series.push((format!("seed {seed}"), traj.entropy_series()));
        }
    }
    let _ = writeln!(
        art.report,
        "three velocities: sigma = {}, N = {}, dt = {}, T = {}, theta = {}",
        sim.sigma, sim.grid.n, cfg.dt, cfg.t_final, sim.theory.theta
    );
    summarize_sim(sim, &obs, art);
    if sim.plots {
        entropy_plot(&format!("three-velocity entropy, sigma = {}", sim.sigma), series, art);
    }
    Ok(())
}

/// Minimum fitted entropy rate over the verification trajectories.
fn observed_entropy_rate(sim: &Sim) -> Result<f64> {
    let cfg = &sim.grid.cfg;
    let rates: Vec<Result<f64>> = sim
        .seeds
        .par_iter()
        .map(|&seed| {
            let traj = simulate_2v(&initial_2v(sim, seed)?, &sim.sigma, cfg)?;
            Ok(observe(&traj, cfg.t_final, false)?.entropy_rate)
        })
        .collect();
    rates.into_iter().try_fold(f64::INFINITY, |m, r| Ok(m.min(r?)))
}

/// Summary rows pairing each named rate with the observed entropy decay.
/// A `None` theoretical value is looked up from what the table computed.
fn observed_rows(tp: &TwoPiece, art: &mut Artifacts, rows: &[(&str, Option<f64>)]) -> Result<()> {
    let observed = match &tp.check {
        Some(sim) => Some(observed_entropy_rate(sim)?),
        None => None,
    };
    for &(name, value) in rows {
        let theoretical = value.or_else(|| {
            art.summary
                .iter()
                .find(|r| r.quantity == name)
                .map(|r| r.theoretical)
        });
        let Some(theoretical) = theoretical else { continue };
        art.summary.retain(|r| r.quantity != name);
        art.summary.push(SummaryRow::rate(name, theoretical, observed));
    }
    if let Some(sim) = &tp.check {
        let _ = writeln!(
            art.report,
            "observed: entropy E_theta (theta = {}) fitted on {} random trajectories, N = {}, T = {:.4}",
            tp.theta,
            sim.seeds.len(),
            sim.grid.n,
            sim.grid.cfg.t_final
        );
    }
    Ok(())
}

fn poincare_table(tp: &TwoPiece, art: &mut Artifacts) -> Result<()> {
    let w = weight_from_sigma(&tp.sigma, tp.theta, tp.alpha0)?;
    let first = weighted_poincare(&w, None, None)?;
    let it = improved_alpha(&tp.sigma, tp.theta, tp.alpha0, IMPROVED_TOL, IMPROVED_MAX_ITER)?;
    art.add("iteration.csv", csv_bytes(|b| it.write_csv(b))?);
    let _ = writeln!(
        art.report,
        "weighted Poincare: omega = ({:.10}, {:.10}), c_min = {:.10}, C^2 = {:.10}, C = {:.6}",
        w.w1,
        w.w2,
        first.c_min,
        first.c_omega_sq,
        first.c_omega_sq.sqrt()
    );
    if first.close_root {
        let _ = writeln!(art.report, "warning: a second root lies close to c_min");
    }
    let _ = writeln!(
        art.report,
        "iteration: {} steps, converged = {}, stopped_inadmissible = {}",
        it.history.len() - 1,
        it.converged,
        it.stopped_inadmissible
    );
    if !it.converged {
        return Err(CliError::Numerical(format!(
            "improved rate iteration did not converge in {IMPROVED_MAX_ITER} steps"
        )));
    }
    art.summary.push(SummaryRow::info("c_omega_sq", first.c_omega_sq, None));
    art.summary.push(SummaryRow::info("alpha_max", it.alpha_max, None));
    Ok(())
}

fn telegrapher_table(tp: &TwoPiece, art: &mut Artifacts) -> Result<()> {
    let bs = bs_rate(&tp.sigma)?;
    art.add("roots.csv", csv_bytes(|b| bs.gap.write_csv(b))?);
    let g = &bs.gap;
    let _ = writeln!(
        art.report,
        "telegrapher: sigma~ = ({}, {}), {} roots in the strip, gap = {:.8} at gamma = {}{}",
        bs.problem.sigma1,
        bs.problem.sigma2,
        g.all_roots.len(),
        g.gap,
        g.eigenvalue,
        if g.on_boundary { " (on the strip edge)" } else { "" }
    );
    art.summary.push(SummaryRow::info("telegrapher_gap", g.gap, None));
    art.summary.push(SummaryRow::info("sigma_l1_norm", bs.l1_norm, None));
    art.summary.push(SummaryRow::info("alpha_bs", bs.alpha, None));
    Ok(())
}

fn appendix(tp: &TwoPiece, art: &mut Artifacts) -> Result<()> {
    poincare_table(tp, art)?;
    telegrapher_table(tp, art)?;
    let find = |art: &Artifacts, q: &str| {
        art.summary
            .iter()
            .find(|r| r.quantity == q)
            .map(|r| r.theoretical)
            .unwrap_or(f64::NAN)
    };
    let (a_max, a_bs) = (find(art, "alpha_max"), find(art, "alpha_bs"));
    observed_rows(
        tp,
        art,
        &[("alpha_star", Some(tp.alpha0)), ("alpha_max", None), ("alpha_bs", None)],
    )?;
    let ordered = tp.alpha0 < a_max && a_max < a_bs;
    let _ = writeln!(
        art.report,
        "ordering alpha_star < alpha_max < alpha_bs: {:.6} < {:.6} < {:.6}: {ordered}",
        tp.alpha0, a_max, a_bs
    );
    let reports: Vec<RateReport> = vec![
        RateReport {
            theta: Some(tp.theta),
            rate: tp.alpha0,
            prefactor: Some(gtlab::rates::equivalence_prefactor(tp.theta)),
            source: gtlab::RateSource::PerturbativeThm,
        },
        RateReport {
            theta: Some(tp.theta),
            rate: a_max,
            prefactor: Some(gtlab::rates::equivalence_prefactor(tp.theta)),
            source: gtlab::RateSource::ImprovedPoincare,
        },
        RateReport {
            theta: None,
            rate: a_bs,
            prefactor: None,
            source: gtlab::RateSource::BernardSalvarani,
        },
    ];
    art.add("rates.csv", csv_bytes(|b| write_reports_csv(b, &reports))?);
    Ok(())
}

fn eigen_plot(sigma: f64, k_max: i64, art: &mut Artifacts) {
    let mut minus = Vec::new();
    let mut plus = Vec::new();
    for k in (-k_max..=k_max).filter(|&k| k != 0) {
        let e = eigenvalues(k, sigma);
        // mirror the conjugate branch so both half-planes show
        let s = if k < 0 { -1.0 } else { 1.0 };
        minus.push((e.minus.re, s * e.minus.im));
        plus.push((e.plus.re, s * e.plus.im));
    }
    let gap = spectral_gap(sigma).mu;
    add_plot(
        art,
        "eigenvalues.svg",
        plot::eigenvalue_scatter(&format!("modal eigenvalues, sigma = {sigma}"), &minus, &plus, gap),
    );
}

fn modal(sigma: f64, eps: Option<f64>, k_max: i64, plots: bool, art: &mut Artifacts) -> Result<()> {
    let rep = modal_report(sigma, eps, k_max)?;
    art.add("modal.csv", csv_bytes(|b| rep.write_csv(b))?);
    for w in &rep.warnings {
        let _ = writeln!(art.report, "warning: {w}");
    }
    let rate = constant_rate(sigma, eps)?;
    let min_gap = rep.rows.iter().map(|r| r.lyapunov_gap).fold(f64::INFINITY, f64::min);
    art.summary.push(SummaryRow::info("spectral_gap", spectral_gap(sigma).mu, None));
    art.summary.push(SummaryRow::new(
        "min_lyapunov_gap",
        rate.norm_rate(),
        Some(min_gap),
        Check::AtLeast(MODAL_TOL),
    ));
    if plots {
        eigen_plot(sigma, k_max.min(40), art);
    }
    Ok(())
}

fn rates(sigma: &RelaxationProfile, pair: Option<(f64, f64)>, art: &mut Artifacts) -> Result<()> {
    let mut reports = Vec::new();
    if sigma.is_constant() {
        let s = sigma.sigma_min();
        // σ = 2 needs ε; tabulate a few representative values
        if (s - 2.0).abs() < 1e-12 {
            for e in [0.5, 0.1, 0.01] {
                reports.push(constant_rate(s, Some(e))?);
            }
        } else {
            reports.push(constant_rate(s, None)?);
        }
    } else {
        reports.push(perturbative_rate(sigma)?);
        if sigma.two_piece_values().is_some() {
            let base = perturbative_rate(sigma)?;
            let theta = base.theta.unwrap_or(0.0);
            reports.push(improved_alpha(sigma, theta, base.rate, IMPROVED_TOL, IMPROVED_MAX_ITER)?.report());
            reports.push(bs_rate(sigma)?.report());
        }
    }
    reports.push(rate_3v(sigma.sigma_min(), sigma.sigma_max())?);
    art.add("rates.csv", csv_bytes(|b| write_reports_csv(b, &reports))?);
    let _ = writeln!(art.report, "sigma = {sigma}");
    art.report.push_str(&format_reports_table(&reports));
    if let Some((theta, alpha)) = pair {
        let v2 = check_conditions_2v(theta, alpha, sigma);
        let v3 = check_conditions_3v(theta, alpha, sigma);
        let _ = writeln!(art.report, "two velocities   (theta, alpha) = ({theta}, {alpha}): {v2}");
        let _ = writeln!(art.report, "three velocities (theta, alpha) = ({theta}, {alpha}): {v3}");
        let mut csv = String::from("variant,theta,alpha,holds,detail\n");
        let _ = writeln!(csv, "two_velocity,{theta},{alpha},{},{}", v2.holds(), v2);
        let _ = writeln!(csv, "three_velocity,{theta},{alpha},{},{}", v3.holds(), v3);
        art.add("conditions.csv", csv);
    }
    Ok(())
}

fn rate_curve(lo: f64, hi: f64, points: usize, plots: bool, art: &mut Artifacts) -> Result<()> {
    let mut grid: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .filter(|s| (s - 2.0).abs() > 1e-9)
        .collect();
    let marked = lo < 2.0 && hi > 2.0;
    if marked {
        grid.push(2.0);
        grid.sort_by(f64::total_cmp);
    }
    let mut csv = String::from("sigma,mu,theta,defective\n");
    let mut pts = Vec::with_capacity(grid.len());
    for &s in &grid {
        let m = mu(s);
        let defective = s == 2.0;
        let _ = writeln!(csv, "{s},{m},{},{defective}", theta_of_sigma(s));
        pts.push((s, m));
    }
    art.add("rate_curve.csv", csv);

    let rising = pts.windows(2).filter(|w| w[1].0 <= 2.0).all(|w| w[1].1 > w[0].1);
    let falling = pts.windows(2).filter(|w| w[0].0 >= 2.0).all(|w| w[1].1 < w[0].1);
    let _ = writeln!(
        art.report,
        "mu increasing on (0, 2): {rising}; decreasing on (2, inf): {falling}; sigma*mu at sigma = {hi}: {:.6}",
        hi * mu(hi)
    );
    if marked {
        let _ = writeln!(art.report, "sigma = 2 marked as defective (mu = 1)");
    }
    if plots {
        add_plot(art, "rate_curve.svg", plot::rate_curve(&pts, 2.0));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp(scenario: Scenario, params: Params) -> Experiment {
        Experiment {
            name: "t".into(),
            scenario,
            params,
        }
    }

    #[test]
    fn scenario_names() {
        assert_eq!("AppendixAComparison".parse::<Scenario>().unwrap(), Scenario::AppendixAComparison);
        assert_eq!("modal-report".parse::<Scenario>().unwrap(), Scenario::ModalReport);
        assert!("Nope".parse::<Scenario>().is_err());
    }

    #[test]
    fn validation_rejects_before_running() {
        let bad = [
            (Scenario::ConstantSigma, Params { n: Some(7), ..Params::default() }, "n"),
            (Scenario::ConstantSigma, Params { dt: Some(0.01), ..Params::default() }, "dt"),
            (Scenario::ConstantSigma, Params { sigma: Some("const:2".into()), ..Params::default() }, "eps"),
            (Scenario::ConstantSigma, Params { eps: Some(0.1), ..Params::default() }, "eps"),
            (Scenario::PoincareTable, Params { sigma: Some("const:1".into()), ..Params::default() }, "sigma"),
            (Scenario::PoincareTable, Params { alpha: Some(0.9), ..Params::default() }, "alpha"),
            (Scenario::ModalReport, Params { k_max: Some(0), ..Params::default() }, "k-max"),
            (Scenario::Rates, Params { theta: Some(1.0), ..Params::default() }, "alpha"),
            (Scenario::RateCurve, Params { sigma_grid: Some("3,1,10".into()), ..Params::default() }, "sigma-grid"),
        ];
        for (sc, p, field) in bad {
            match prepare(&exp(sc, p.clone())) {
                Err(CliError::Validation { field: f, .. }) => assert_eq!(f, field, "{sc} {p:?}"),
                other => panic!("{sc} {p:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn constant_sigma_summary() {
        let p = Params {
            n: Some(64),
            t_final: Some(20.0),
            no_plots: true,
            ..Params::default()
        };
        let art = prepare(&exp(Scenario::ConstantSigma, p)).unwrap().run().unwrap();
        let names: Vec<&str> = art.files.iter().map(|f| f.0.as_str()).collect();
        assert_eq!(names, ["trajectory.csv", "summary.csv"]);
        let rate = art.summary.iter().find(|r| r.quantity == "norm_rate").unwrap();
        assert_eq!(rate.theoretical, 0.5);
        assert_eq!(rate.holds(), Some(true));
        assert!(!art.any_failed());
    }

    #[test]
    fn rate_curve_marks_the_defective_point() {
        let p = Params {
            sigma_grid: Some("0.5,10,20".into()),
            no_plots: true,
            ..Params::default()
        };
        let art = prepare(&exp(Scenario::RateCurve, p)).unwrap().run().unwrap();
        let csv = String::from_utf8(art.files[0].1.clone()).unwrap();
        assert!(csv.contains("\n2,1,2,true\n"));
        assert!(csv.contains(&format!("\n10,{},0.4,false\n", mu(10.0))));
        assert!(art.report.contains("increasing on (0, 2): true; decreasing on (2, inf): true"));
    }
}
