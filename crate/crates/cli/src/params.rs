//! Flat experiment parameters shared by the subcommands and config files.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use gtlab::solver::Scheme;
use gtlab::{GridFunction, RelaxationProfile};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Split,
    Rk4,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Split => Scheme::SplitExact,
            SchemeArg::Rk4 => Scheme::SpectralRK4,
        }
    }
}

/// Initial data preset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    /// `u₀ = 0`, `v₀ = cos x`.
    Mode1,
    /// Seeded band-limited data, `|k| ≤ N/8`.
    Random,
}

/// Every knob an experiment may set. Unset values fall back to
/// scenario-specific defaults.
#[derive(Args, Clone, Debug, Default, PartialEq)]
pub struct Params {
    /// Relaxation profile: `const:5`, `pc:1@pi,4@2pi` or `file:sigma.csv`.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Grid resolution (even, ≥ 8).
    #[arg(long)]
    pub n: Option<usize>,
    /// Time step; defaults to the grid spacing.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time
    #[arg(long = "t-final")]
    pub t_final: Option<f64>,
    /// Twist weight of the entropy.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Claimed entropy decay rate (or the starting rate of the iteration).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Defect parameter, only for `σ = 2`.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Seed for random initial data
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of seeded trajectories (seeds `seed`, `seed+1`, …).
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Largest mode in modal tables.
    #[arg(long = "k-max")]
    pub k_max: Option<i64>,
    /// Range and size of the σ grid for rate curves: `lo,hi,points`.
    #[arg(long = "sigma-grid")]
    pub sigma_grid: Option<String>,
    /// Skip SVG output.
    #[arg(long = "no-plots")]
    pub no_plots: bool,
}

impl Params {
    /// `self` with every field that `over` sets replaced.
    pub fn overridden_by(&self, over: &Params) -> Params {
        Params {
            sigma: over.sigma.clone().or_else(|| self.sigma.clone()),
            n: over.n.or(self.n),
            dt: over.dt.or(self.dt),
            t_final: over.t_final.or(self.t_final),
            theta: over.theta.or(self.theta),
            alpha: over.alpha.or(self.alpha),
            eps: over.eps.or(self.eps),
            seed: over.seed.or(self.seed),
            trials: over.trials.or(self.trials),
            init: over.init.or(self.init),
            scheme: over.scheme.or(self.scheme),
            k_max: over.k_max.or(self.k_max),
            sigma_grid: over.sigma_grid.clone().or_else(|| self.sigma_grid.clone()),
            no_plots: over.no_plots || self.no_plots,
        }
    }

    /// Sets one field from its textual config form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "sigma" => self.sigma = Some(value.to_string()),
            "n" => self.n = Some(parse_num(&key, value)?),
            "dt" => self.dt = Some(parse_real(&key, value)?),
            "t-final" => self.t_final = Some(parse_real(&key, value)?),
            "theta" => self.theta = Some(parse_real(&key, value)?),
            "alpha" => self.alpha = Some(parse_real(&key, value)?),
            "eps" => self.eps = Some(parse_real(&key, value)?),
            "seed" => self.seed = Some(parse_num(&key, value)?),
            "trials" => self.trials = Some(parse_num(&key, value)?),
            "k-max" => self.k_max = Some(parse_num(&key, value)?),
            "init" => self.init = Some(parse_enum(&key, value)?),
            "scheme" => self.scheme = Some(parse_enum(&key, value)?),
            "sigma-grid" => self.sigma_grid = Some(value.to_string()),
            "plots" => {
                self.no_plots = !matches!(value, "true" | "yes" | "1" | "on");
            }
            _ => return Err(CliError::invalid(&key, "unknown parameter")),
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::invalid(key, format!("'{value}' is not a non-negative integer")))
}

fn parse_real(key: &str, value: &str) -> Result<f64> {
    let x = parse_pi_multiple(value)
        .ok_or_else(|| CliError::invalid(key, format!("'{value}' is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::invalid(key, "must be finite"));
    }
    Ok(x)
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T> {
    T::from_str(value, true).map_err(|e| CliError::invalid(key, e))
}

/// A number, optionally followed by `pi` (`2pi`, `0.5*pi`, `pi`).
pub fn parse_pi_multiple(s: &str) -> Option<f64> {
    let s = s.trim();
    match s.strip_suffix("pi") {
        Some(head) => {
            let head = head.trim().trim_end_matches('*').trim();
            let c = if head.is_empty() { 1.0 } else { head.parse::<f64>().ok()? };
            Some(c * PI)
        }
        None => s.parse().ok(),
    }
}

/// Parses a `--sigma` spec. Sampled profiles are read at resolution `n`.
pub fn parse_sigma(spec: &str, n: usize) -> Result<RelaxationProfile> {
    let bad = |msg: String| CliError::invalid("sigma", msg);
    let (kind, body) = spec.split_once(':').unwrap_or(("const", spec));
    match kind.trim() {
        "const" => {
            let s = parse_pi_multiple(body).ok_or_else(|| bad(format!("'{body}' is not a number")))?;
            Ok(RelaxationProfile::constant(s)?)
        }
        "pc" => {
            let mut pieces = Vec::new();
            for part in body.split(',') {
                let (val, bp) = part
                    .split_once('@')
                    .ok_or_else(|| bad(format!("piece '{part}' is not of the form value@breakpoint")))?;
                let val = parse_pi_multiple(val).ok_or_else(|| bad(format!("bad value in '{part}'")))?;
                let bp = parse_pi_multiple(bp).ok_or_else(|| bad(format!("bad breakpoint in '{part}'")))?;
                pieces.push((bp, val));
            }
            Ok(RelaxationProfile::piecewise(pieces)?)
        }
        "file" => {
            let path = Path::new(body.trim());
            let file = File::open(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
            let g = GridFunction::read_csv(BufReader::new(file))
                .map_err(|e| bad(format!("{}: {e}", path.display())))?;
            if g.len() != n {
                return Err(bad(format!(
                    "{} holds {} samples but the grid has n = {n}",
                    path.display(),
                    g.len()
                )));
            }
            Ok(RelaxationProfile::sampled(g)?)
        }
        other => Err(bad(format!("unknown profile kind '{other}' (use const, pc or file)"))),
    }
}

/// `lo,hi,points` for rate curves.
pub fn parse_sigma_grid(spec: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let bad = || CliError::invalid("sigma-grid", format!("'{spec}' is not lo,hi,points"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let pts: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && pts >= 2) {
        return Err(CliError::invalid("sigma-grid", "need 0 < lo < hi and at least 2 points"));
    }
    Ok((lo, hi, pts))
}

/// Output directory handling shared by every command.
#[derive(Args, Clone, Debug)]
pub struct OutArgs {
    /// Directory for CSV and SVG artifacts.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}
