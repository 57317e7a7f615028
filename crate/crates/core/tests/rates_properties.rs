//! Limits, continuity and optimality of the perturbative rates.

use gtlab::rates::{
    alpha_star, alpha_star_branch1, alpha_star_branch2, check_conditions_2v, gamma_bounds, mu,
    theta_star,
};
use gtlab::RelaxationProfile;
use proptest::prelude::*;

#[test]
fn constant_limit_is_recovered() {
    let delta = 1e-6;
    for s in [0.5, 1.0, 3.0, 5.0] {
        let theta = theta_star(s - delta, s + delta).unwrap();
        let alpha = alpha_star(s - delta, s + delta).unwrap();
        let (theta_lim, alpha_lim) = if s < 2.0 {
            (s, s)
        } else {
            (4.0 / s, s - (s * s - 4.0).sqrt())
        };
        assert!((theta - theta_lim).abs() < 1e-4, "σ={s}: θ*={theta}");
        assert!((alpha - alpha_lim).abs() < 1e-4, "σ={s}: α*={alpha}");
    }
}

#[test]
fn branches_meet_on_the_switching_curve() {
    for i in 1..=800 {
        let s_max = 2.0 + 8.0 * i as f64 / 800.0;
        let s_min = 4.0 / s_max;
        let gap = (alpha_star_branch1(s_min, s_max) - alpha_star_branch2(s_max)).abs();
        assert!(gap < 1e-10, "σ_max={s_max}: {gap}");
    }
}

fn grid_maximiser(theta_max: f64, s_min: f64, s_max: f64) -> (f64, f64) {
    let pts = 10_000;
    (1..=pts)
        .map(|i| {
            let th = theta_max * i as f64 / pts as f64;
            (th, gamma_bounds(th, s_min, s_max).unwrap().1)
        })
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

#[test]
fn gamma_max_peaks_at_theta_star() {
    for (lo, hi) in [(1.0, 4.0), (0.5, 3.0), (0.2, 1.5), (1.5, 3.5), (3.0, 6.0), (0.9, 1.1)] {
        let ts = theta_star(lo, hi).unwrap();
        let (arg, best) = grid_maximiser(ts, lo, hi);
        let at_star = gamma_bounds(ts, lo, hi).unwrap().1;
        assert!(best <= at_star + 1e-12, "({lo},{hi}): {best} > {at_star}");
        assert!((arg - ts).abs() < 1e-12, "({lo},{hi}): argmax {arg} ≠ {ts}");
    }
}

proptest! {
    #[test]
    fn above_the_curve_rate_is_twice_the_gap(s_max in 2.01f64..12.0, frac in 0.01f64..0.99) {
        let lo = 4.0 / s_max;
        let s_min = lo + frac * (s_max - lo);
        let alpha = alpha_star(s_min, s_max).unwrap();
        prop_assert!((alpha - 2.0 * mu(s_max)).abs() < 1e-12);
    }

    #[test]
    fn theorem_pair_satisfies_its_conditions(s_min in 0.05f64..3.0, spread in 0.01f64..6.0) {
        let s_max = s_min + spread;
        let profile = RelaxationProfile::two_piece(s_min, s_max).unwrap();
        let theta = theta_star(s_min, s_max).unwrap();
        let alpha = alpha_star(s_min, s_max).unwrap();
        prop_assume!(alpha > 1e-6);
        // α* sits on the boundary α = γ_max(θ*); back off a hair for the strict parts
        let verdict = check_conditions_2v(theta, alpha * (1.0 - 1e-9), &profile);
        prop_assert!(verdict.holds(), "({}, {}): {}", s_min, s_max, verdict);
    }

    #[test]
    fn rate_never_exceeds_twist(s_min in 0.05f64..5.0, spread in 0.01f64..6.0) {
        let s_max = s_min + spread;
        let theta = theta_star(s_min, s_max).unwrap();
        let alpha = alpha_star(s_min, s_max).unwrap();
        prop_assert!(alpha <= theta + 1e-12);
    }
}
