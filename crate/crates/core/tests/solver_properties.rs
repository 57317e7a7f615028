//! Conservation laws, scheme agreement and decay guarantees along trajectories.

use gtlab::fit::{default_window, fit_decay_rate, fit_envelope_rate};
use gtlab::init::{harmonic, random_macro_2v, random_macro_3v};
use gtlab::rates::{alpha_star, check_conditions_2v, constant_rate, mu, rate_3v, theta_star};
use gtlab::solver::{simulate_2v, simulate_3v, MacroState2V, MacroState3V, RunConfig, Scheme};
use gtlab::{GridFunction, RelaxationProfile};
use std::f64::consts::PI;

fn smooth_sigma(n: usize) -> RelaxationProfile {
    RelaxationProfile::sampled(GridFunction::from_fn(n, |x| 2.0 + (2.0 * x).cos()).unwrap()).unwrap()
}

/// Mild variation keeps the splitting commutator small.
fn gentle_sigma(n: usize) -> RelaxationProfile {
    RelaxationProfile::sampled(GridFunction::from_fn(n, |x| 1.0 + 0.2 * x.sin()).unwrap()).unwrap()
}

#[test]
fn mass_is_conserved_by_both_schemes() {
    let n = 128;
    let (u, v) = random_macro_2v(n, 17).unwrap();
    let u = u.shift(0.7);
    let init = MacroState2V::new(u, v).unwrap();
    let m0 = init.u.average();
    let pc = RelaxationProfile::two_piece(1.0, 4.0).unwrap();
    for (scheme, sigma, tol) in [
        (Scheme::SplitExact, pc.clone(), 1e-12),
        (Scheme::SplitExact, smooth_sigma(n), 1e-12),
        (Scheme::SpectralRK4, smooth_sigma(n), 1e-10),
    ] {
        let cfg = RunConfig::new(5.0, 2.0 * PI / n as f64, 0.5).scheme(scheme);
        let traj = simulate_2v(&init, &sigma, &cfg).unwrap();
        let drift = traj.rows.iter().map(|r| (r.mass - m0).abs()).fold(0.0, f64::max);
        assert!(drift < tol, "{scheme:?}: drift {drift}");
    }
}

#[test]
fn flux_average_decays_exponentially() {
    let n = 128;
    for (seed, s) in [(1, 0.5), (2, 1.0), (3, 3.0)] {
        let (u, v) = random_macro_2v(n, seed).unwrap();
        let init = MacroState2V::new(u, v).unwrap();
        let v0 = init.v.average();
        let cfg = RunConfig::new(6.0, 2.0 * PI / n as f64, 0.5);
        let traj = simulate_2v(&init, &RelaxationProfile::constant(s).unwrap(), &cfg).unwrap();
        for r in &traj.rows {
            let err = (r.v_avg - v0 * (-s * r.t).exp()).abs();
            assert!(err < 1e-8, "σ={s}, t={}: {err}", r.t);
        }
    }
}

#[test]
fn schemes_agree_on_smooth_problems() {
    let n = 256;
    let u = GridFunction::from_fn(n, |x| x.cos() + 0.5 * (2.0 * x).sin()).unwrap();
    let v = GridFunction::from_fn(n, |x| 0.3 + x.sin() - 0.2 * (3.0 * x).cos()).unwrap();
    let init = MacroState2V::new(u, v).unwrap();
    let sigma = gentle_sigma(n);
    let dt = 2.0 * PI / n as f64;
    let t_final = (1.0 / dt).round() * dt;
    let run = |scheme| {
        let cfg = RunConfig::new(t_final, dt, 0.5).scheme(scheme);
        simulate_2v(&init, &sigma, &cfg).unwrap().final_state
    };
    let (a, b) = (run(Scheme::SplitExact), run(Scheme::SpectralRK4));
    let du = a.u.zip_with(&b.u, |x, y| x - y).unwrap();
    let dv = a.v.zip_with(&b.v, |x, y| x - y).unwrap();
    let gap = (du.norm_sq() + dv.norm_sq()).sqrt();
    assert!(gap < 1e-4, "L² discrepancy {gap}");
}

#[test]
fn perturbative_entropy_is_monotone_and_decays() {
    let (lo, hi) = (1.0, 4.0);
    let sigma = RelaxationProfile::two_piece(lo, hi).unwrap();
    let theta = theta_star(lo, hi).unwrap();
    let alpha = alpha_star(lo, hi).unwrap();
    assert!(check_conditions_2v(theta, alpha * (1.0 - 1e-9), &sigma).holds());
    let n = 128;
    let t_final = 8.0 * PI;
    let cfg = RunConfig::new(t_final, 2.0 * PI / n as f64, theta);
    for seed in 0..4 {
        let (u, v) = random_macro_2v(n, seed).unwrap();
        let traj = simulate_2v(&MacroState2V::new(u, v).unwrap(), &sigma, &cfg).unwrap();
        let e = traj.entropy_series();
        let worst = e.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
        assert!(worst < 1e-8, "seed {seed}: entropy rose by {worst}");
        let fit = fit_decay_rate(&e, default_window(t_final)).unwrap();
        assert!(fit.rate >= alpha * 0.98, "seed {seed}: rate {} < {alpha}", fit.rate);
    }
}

#[test]
fn constant_sigma_prefactor_bound() {
    let n = 64;
    for s in [1.0, 4.0] {
        let report = constant_rate(s, None).unwrap();
        let c = report.prefactor.unwrap();
        let m = mu(s);
        let sigma = RelaxationProfile::constant(s).unwrap();
        let cfg = RunConfig::new(10.0, 2.0 * PI / n as f64, report.theta.unwrap());
        for seed in 0..20 {
            let (u, v) = random_macro_2v(n, 100 + seed).unwrap();
            let traj = simulate_2v(&MacroState2V::new(u, v).unwrap(), &sigma, &cfg).unwrap();
            let d0 = traj.rows[0].distance();
            for r in &traj.rows {
                let bound = c * d0 * (-m * r.t).exp();
                assert!(r.distance() <= bound * (1.0 + 1e-9), "σ={s}, seed {seed}, t={}", r.t);
            }
        }
    }
}

#[test]
fn three_velocity_relaxes_to_equilibrium() {
    let n = 64;
    let rep = rate_3v(1.0, 1.0).unwrap();
    let alpha = rep.rate;
    let (u1, u2, u3) = random_macro_3v(n, 4).unwrap();
    let u1 = u1.shift(0.4);
    let init = MacroState3V::new(u1, u2, u3).unwrap();
    let u_inf = init.u1.average();
    let cfg = RunConfig::new(40.0 / alpha, 2.0 * PI / n as f64, rep.theta.unwrap()).record_every(16);
    let traj = simulate_3v(&init, &RelaxationProfile::constant(1.0).unwrap(), &cfg).unwrap();
    let last = traj.rows.last().unwrap();
    assert!(last.t >= 40.0 / alpha - 1e-9);
    assert!((last.mass - u_inf).abs() < 1e-12);
    assert!(last.distance() < 1e-6, "distance {}", last.distance());
}

#[test]
fn three_velocity_entropy_decays_at_guaranteed_rate() {
    let n = 64;
    let rep = rate_3v(1.0, 1.0).unwrap();
    let (theta, alpha) = (rep.theta.unwrap(), rep.rate);
    let t_final = 20.0;
    let cfg = RunConfig::new(t_final, 2.0 * PI / n as f64, theta);
    let (u1, u2, u3) = random_macro_3v(n, 8).unwrap();
    let traj = simulate_3v(
        &MacroState3V::new(u1, u2, u3).unwrap(),
        &RelaxationProfile::constant(1.0).unwrap(),
        &cfg,
    )
    .unwrap();
    let e = traj.entropy_series();
    let worst = e.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
    assert!(worst < 1e-8, "entropy rose by {worst}");
    let fit = fit_decay_rate(&e, default_window(t_final)).unwrap();
    assert!(fit.rate >= alpha * 0.98, "rate {} < {alpha}", fit.rate);
}

#[test]
fn defective_case_follows_polynomial_envelope() {
    let n = 128;
    let init = MacroState2V::new(GridFunction::zeros(n).unwrap(), harmonic(n, 1, 1.0, 0.0).unwrap()).unwrap();
    let eps = 0.1;
    let rep = constant_rate(2.0, Some(eps)).unwrap();
    let t_final = 30.0;
    let cfg = RunConfig::new(t_final, 2.0 * PI / n as f64, rep.theta.unwrap());
    let traj = simulate_2v(&init, &RelaxationProfile::constant(2.0).unwrap(), &cfg).unwrap();
    let d = traj.distance_series();
    let window = default_window(t_final);
    let env = fit_envelope_rate(&d, window).unwrap();
    assert!((env.rate - 1.0).abs() < 0.02, "envelope rate {}", env.rate);
    let pure = fit_decay_rate(&d, window).unwrap();
    assert!(pure.rate < 1.0, "pure rate {}", pure.rate);
    assert!(pure.rate >= rep.norm_rate() * 0.98, "pure rate {} < {}", pure.rate, rep.norm_rate());
}
