//! Twisted `L²` entropies and their exact time derivatives.

use crate::rates::RelaxationProfile;
use crate::torus::{GridError, GridFunction, Scalar};

const SQRT_TWO_THIRDS: f64 = 0.816_496_580_927_726;
const INV_SQRT_THREE: f64 = 0.577_350_269_189_625_8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    TwoVelocity,
    ThreeVelocity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyParams {
    pub theta: f64,
    pub variant: Variant,
}

impl EntropyParams {
    pub fn two_velocity(theta: f64) -> Self {
        Self {
            theta,
            variant: Variant::TwoVelocity,
        }
    }

    pub fn three_velocity(theta: f64) -> Self {
        Self {
            theta,
            variant: Variant::ThreeVelocity,
        }
    }

    /// Whether the entropy is equivalent to the plain `L²` norm.
    pub fn is_equivalent(&self) -> bool {
        self.theta.abs() < 2.0
    }
}

/// `E_θ(f, g) = ‖f‖² + ‖g‖² − θ Re<∂⁻¹f, g>`.
pub fn entropy2<T: Scalar>(
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    theta: f64,
) -> Result<f64, GridError> {
    let mixed = f.antiderivative().inner(g)?.re();
    Ok(f.norm_sq() + g.norm_sq() - theta * mixed)
}

/// `E_θ(f, g) + ‖h‖²`.
pub fn entropy3<T: Scalar>(
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    h: &GridFunction<T>,
    theta: f64,
) -> Result<f64, GridError> {
    f.ensure_same_grid(h)?;
    Ok(entropy2(f, g, theta)? + h.norm_sq())
}

/// `(1 − |θ|/2, 1 + |θ|/2)`.
pub fn equivalence_bounds(theta: f64) -> (f64, f64) {
    (1.0 - theta.abs() / 2.0, 1.0 + theta.abs() / 2.0)
}

/// Exact `dE_θ/dt` for the two-velocity macro system `u_t + v_x = 0`,
/// `v_t + u_x = −σv`. The mean of `u` is removed internally.
pub fn entropy_evolution_rhs(
    u: &GridFunction,
    v: &GridFunction,
    sigma: &RelaxationProfile,
    theta: f64,
) -> Result<f64, GridError> {
    u.ensure_same_grid(v)?;
    let s = sigma.sample(u.len()).map_err(grid_only)?;
    let u_dev = u.shift(-u.average());
    let v_avg = v.average();

    let damping = v.weighted_inner(v, &s.map(|x| theta - 2.0 * x))?;
    let coupling = u_dev.antiderivative().weighted_inner(v, &s)?;
    Ok(-theta * u_dev.norm_sq() + damping + theta * coupling - theta * v_avg * v_avg)
}

/// Exact `d𝔈_θ/dt` for the three-velocity macro system. The mean of `u1`
/// is removed internally.
pub fn entropy_evolution_rhs_3v(
    u1: &GridFunction,
    u2: &GridFunction,
    u3: &GridFunction,
    sigma: &RelaxationProfile,
    theta: f64,
) -> Result<f64, GridError> {
    u1.ensure_same_grid(u2)?;
    u1.ensure_same_grid(u3)?;
    let s = sigma.sample(u1.len()).map_err(grid_only)?;
    let a = SQRT_TWO_THIRDS * theta;
    let u1_dev = u1.shift(-u1.average());
    let u2_avg = u2.average();

    let damping2 = u2.weighted_inner(u2, &s.map(|x| a - 2.0 * x))?;
    let damping3 = -2.0 * u3.weighted_inner(u3, &s)?;
    let cross = u1_dev.inner(u3)?;
    let coupling = u1_dev.antiderivative().weighted_inner(u2, &s)?;
    Ok(damping2 + damping3 - a * u1_dev.norm_sq() - a * u2_avg * u2_avg
        - theta * INV_SQRT_THREE * cross
        + theta * coupling)
}

fn grid_only(e: crate::rates::RateError) -> GridError {
    match e {
        crate::rates::RateError::Grid(g) => g,
        other => GridError::Malformed(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn grid(n: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(n, f).unwrap()
    }

    #[test]
    fn entropy2_examples() {
        let n = 128;
        let sin = grid(n, f64::sin);
        let cos = grid(n, f64::cos);
        let zero = grid(n, |_| 0.0);
        for theta in [-1.5, 0.0, 1.0, 7.0] {
            assert_abs_diff_eq!(entropy2(&sin, &zero, theta).unwrap(), 0.5, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(entropy2(&sin, &cos, 1.0).unwrap(), 1.5, epsilon = 1e-10);
        assert_abs_diff_eq!(
            entropy2(&sin, &cos.scale(-1.0), 1.0).unwrap(),
            0.5,
            epsilon = 1e-10
        );
    }

    #[test]
    fn entropy2_complex_takes_real_part() {
        let n = 64;
        let f = GridFunction::from_fn(n, |x| Complex64::new(0.0, x).exp()).unwrap();
        let g = GridFunction::from_fn(n, |x| Complex64::new(0.0, x).exp() * Complex64::i())
            .unwrap();
        // ∂⁻¹e^{ix} = −i e^{ix}; <−i e^{ix}, i e^{ix}> = −1
        assert_abs_diff_eq!(entropy2(&f, &g, 0.5).unwrap(), 2.5, epsilon = 1e-12);
        let g = GridFunction::from_fn(n, |x| Complex64::new(0.0, x).exp()).unwrap();
        // purely imaginary mixed term drops out
        assert_abs_diff_eq!(entropy2(&f, &g, 0.5).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy3_examples() {
        let n = 128;
        let sin = grid(n, f64::sin);
        let cos = grid(n, f64::cos);
        let zero = grid(n, |_| 0.0);
        assert_abs_diff_eq!(
            entropy3(&sin, &cos, &zero, 0.7).unwrap(),
            entropy2(&sin, &cos, 0.7).unwrap(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(entropy3(&zero, &zero, &cos, 1.0).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(entropy3(&sin, &cos, &sin, 1.0).unwrap(), 2.0, epsilon = 1e-10);
        let short = grid(64, f64::sin);
        assert!(entropy3(&sin, &cos, &short, 1.0).is_err());
        assert!(entropy2(&sin, &short, 1.0).is_err());
    }

    #[test]
    fn equivalence_bound_examples() {
        assert_eq!(equivalence_bounds(0.0), (1.0, 1.0));
        assert_eq!(equivalence_bounds(1.0), (0.5, 1.5));
        let (lo, hi) = equivalence_bounds(1.9);
        assert_abs_diff_eq!(lo, 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 1.95, epsilon = 1e-15);
    }

    #[test]
    fn evolution_rhs_examples() {
        let n = 128;
        let one = RelaxationProfile::constant(1.0).unwrap();
        let u = grid(n, |x| 3.0 + x.sin());
        let zero = grid(n, |_| 0.0);
        assert_abs_diff_eq!(
            entropy_evolution_rhs(&u, &zero, &one, 1.0).unwrap(),
            -0.5,
            epsilon = 1e-12
        );
        let flat = grid(n, |_| 3.0);
        let cos = grid(n, f64::cos);
        assert_abs_diff_eq!(
            entropy_evolution_rhs(&flat, &cos, &one, 1.0).unwrap(),
            -0.5,
            epsilon = 1e-12
        );
        let ones = grid(n, |_| 1.0);
        assert_abs_diff_eq!(
            entropy_evolution_rhs(&flat, &ones, &one, 1.0).unwrap(),
            -2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn entropy2_is_sum_of_modal_twisted_norms() {
        let n = 64;
        let f = grid(n, |x| x.sin() - 0.3 * (3.0 * x).cos() + 0.2 * (5.0 * x).sin());
        let g = grid(n, |x| 0.7 + 0.4 * x.cos() + (2.0 * x).sin() - 0.1 * (5.0 * x).cos());
        for sigma in [0.3, 1.0, 1.7] {
            let (fh, gh) = (f.fourier(), g.fourier());
            let mut total = gh.get(0).unwrap().norm_sqr();
            for k in (-(n as i64) / 2 + 1..n as i64 / 2).filter(|&k| k != 0) {
                let p = crate::modal::p_case_iii(k, sigma).unwrap();
                total += p.quadratic_form([fh.get(k).unwrap(), gh.get(k).unwrap()]);
            }
            assert_abs_diff_eq!(entropy2(&f, &g, sigma).unwrap(), total, epsilon = 1e-10);
        }
    }

    #[test]
    fn three_velocity_rhs_reduces_on_u2_only() {
        // with u1 = u3 = 0 only the u2 damping and mean terms survive
        let n = 64;
        let one = RelaxationProfile::constant(1.0).unwrap();
        let zero = grid(n, |_| 0.0);
        let u2 = grid(n, |x| 1.0 + x.cos());
        let theta = 0.5;
        let a = SQRT_TWO_THIRDS * theta;
        let expected = (a - 2.0) * 1.5 - a;
        assert_abs_diff_eq!(
            entropy_evolution_rhs_3v(&zero, &u2, &zero, &one, theta).unwrap(),
            expected,
            epsilon = 1e-12
        );
        // u3 alone decays at 2σ
        let u3 = grid(n, f64::sin);
        assert_abs_diff_eq!(
            entropy_evolution_rhs_3v(&zero, &zero, &u3, &one, theta).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
    }
}
