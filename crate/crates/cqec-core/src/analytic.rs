//! Closed-form solutions for the three-qubit phase code under free
//! (undriven) evolution, and the strong-correction approximations.
//!
//! For a state starting in the syndrome-0 sector the z component rides the
//! correct-syndrome probability, z(t) = z0 p0(t), while the transverse
//! components decay through the two-mode system with rates
//!
//! ```text
//! lambda_+- = 4 gamma' + gamma/2 -+ sqrt(4 gamma'^2 + 4 gamma gamma' + gamma^2/4)
//! ```
//!
//! (lambda_+ lambda_- = 12 gamma'^2 and lambda_+ + lambda_- = gamma + 8 gamma'
//! exactly). The fidelity after one final recovery event is
//!
//! ```text
//! F = ((1 + z0^2) + (x0^2 + y0^2) (l- e^{-l+ t} - l+ e^{-l- t}) / (l- - l+)) / 2
//! ```
//!
//! Only p0(t) is generic in the error count N; everything else is specific
//! to this code. The driven case has no closed form here and is handled by
//! the integrating engines.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use libm::exp;

use crate::code::StabilizerCode;
use crate::lindblad::DynamicsError;
use crate::scenario::{Scenario, StepRecord};

/// Strong-correction expansions are first order in epsilon = gamma'/gamma;
/// beyond this the approximation error is no longer small.
pub const STRONG_CORRECTION_EPSILON_MAX: f64 = 0.1;

/// The rates governing the free dynamics, with the derived timescales.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSet {
    /// Syndrome-probability relaxation rate gamma + (N+1) gamma' (N = 3).
    pub lambda: f64,
    /// Slow transverse rate.
    pub lambda_plus: f64,
    /// Fast transverse rate.
    pub lambda_minus: f64,
    /// gamma' / gamma; absent when gamma = 0.
    pub epsilon: Option<f64>,
    /// Corrective-jump timescale 1/gamma; absent when gamma = 0.
    pub t_c: Option<f64>,
    /// Slow fidelity-loss timescale t_c / (12 epsilon^2); absent when either
    /// rate vanishes.
    pub t_2: Option<f64>,
}

/// Correct-syndrome probability, valid for any non-degenerate code with N
/// errors in the continuous-correction limit:
/// p0(t) = (g + g')/(g + (N+1) g') + (p0(0) - that) exp(-lambda t).
pub fn p0_exact(t: f64, gamma: f64, gamma_prime: f64, n_errors: usize, p0_initial: f64) -> f64 {
    let lambda = gamma + (n_errors as f64 + 1.0) * gamma_prime;
    if lambda == 0.0 {
        return p0_initial;
    }
    let stationary = (gamma + gamma_prime) / lambda;
    stationary + (p0_initial - stationary) * exp(-lambda * t)
}

/// All decay rates and timescales of the three-qubit code.
pub fn decay_rates(gamma: f64, gamma_prime: f64) -> RateSet {
    let root = libm::sqrt(
        4.0 * gamma_prime * gamma_prime + 4.0 * gamma * gamma_prime + gamma * gamma / 4.0,
    );
    let mid = 4.0 * gamma_prime + gamma / 2.0;
    let epsilon = (gamma > 0.0).then(|| gamma_prime / gamma);
    let t_c = (gamma > 0.0).then(|| 1.0 / gamma);
    let t_2 = match (t_c, epsilon) {
        (Some(tc), Some(eps)) if eps > 0.0 => Some(tc / (12.0 * eps * eps)),
        _ => None,
    };
    RateSet {
        lambda: gamma + 4.0 * gamma_prime,
        lambda_plus: mid - root,
        lambda_minus: mid + root,
        epsilon,
        t_c,
        t_2,
    }
}

/// Decay factor shared by the transverse components:
/// ((3g' - l+) e^{-l- t} + (l- - 3g') e^{-l+ t}) / (l- - l+).
/// The rates are degenerate only when both vanish, where the factor is 1.
fn transverse_factor(t: f64, gamma: f64, gamma_prime: f64) -> f64 {
    let rates = decay_rates(gamma, gamma_prime);
    let (lp, lm) = (rates.lambda_plus, rates.lambda_minus);
    if lm - lp == 0.0 {
        return 1.0;
    }
    ((3.0 * gamma_prime - lp) * exp(-lm * t) + (lm - 3.0 * gamma_prime) * exp(-lp * t)) / (lm - lp)
}

/// Exact syndrome-0 Bloch vector at time t for a state that started wholly
/// in syndrome 0 (free evolution).
pub fn bloch_exact(t: f64, gamma: f64, gamma_prime: f64, r0: [f64; 3]) -> [f64; 3] {
    let g = transverse_factor(t, gamma, gamma_prime);
    [
        r0[0] * g,
        r0[1] * g,
        r0[2] * p0_exact(t, gamma, gamma_prime, 3, 1.0),
    ]
}

/// Exact recovered fidelity for free evolution from syndrome 0.
pub fn fidelity_exact(t: f64, gamma: f64, gamma_prime: f64, r0: [f64; 3]) -> f64 {
    let rates = decay_rates(gamma, gamma_prime);
    let (lp, lm) = (rates.lambda_plus, rates.lambda_minus);
    let h = if lm - lp == 0.0 {
        1.0
    } else {
        (lm * exp(-lp * t) - lp * exp(-lm * t)) / (lm - lp)
    };
    let (x0, y0, z0) = (r0[0], r0[1], r0[2]);
    0.5 * ((1.0 + z0 * z0) + (x0 * x0 + y0 * y0) * h)
}

/// Fidelity without continuous correction (gamma = 0):
/// F = ((1 + z0^2) + (x0^2 + y0^2) (3 e^{-2 g' t} - e^{-6 g' t}) / 2) / 2.
/// The short-time expansion has no linear term; the quadratic coefficient is
/// -3 (x0^2 + y0^2) gamma'^2.
pub fn fidelity_no_correction(t: f64, gamma_prime: f64, r0: [f64; 3]) -> f64 {
    let (x0, y0, z0) = (r0[0], r0[1], r0[2]);
    let g = 0.5 * (3.0 * exp(-2.0 * gamma_prime * t) - exp(-6.0 * gamma_prime * t));
    0.5 * ((1.0 + z0 * z0) + (x0 * x0 + y0 * y0) * g)
}

/// First-order strong-correction approximations (epsilon = gamma'/gamma).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongCorrectionApprox {
    pub z: f64,
    pub y: f64,
    pub fidelity: f64,
}

/// z ~ z0 (1 - 3e + 3e exp(-g t)),
/// y ~ y0 ((1 - 3e) exp(-12 e^2 g t) + 3e exp(-g t)),
/// F ~ ((1+z0^2) + (x0^2+y0^2)((1+12e^2) exp(-12 e^2 g t) - 12 e^2 exp(-g t))) / 2.
/// Callers should treat epsilon >= [`STRONG_CORRECTION_EPSILON_MAX`] as out
/// of the expansion's validity range.
pub fn strong_correction(t: f64, gamma: f64, epsilon: f64, r0: [f64; 3]) -> StrongCorrectionApprox {
    let (x0, y0, z0) = (r0[0], r0[1], r0[2]);
    let slow = exp(-12.0 * epsilon * epsilon * gamma * t);
    let fast = exp(-gamma * t);
    let e2 = 12.0 * epsilon * epsilon;
    StrongCorrectionApprox {
        z: z0 * (1.0 - 3.0 * epsilon + 3.0 * epsilon * fast),
        y: y0 * ((1.0 - 3.0 * epsilon) * slow + 3.0 * epsilon * fast),
        fidelity: 0.5 * ((1.0 + z0 * z0) + (x0 * x0 + y0 * y0) * ((1.0 + e2) * slow - e2 * fast)),
    }
}

/// Closed-form engine run: the same record schema as the integrators, for a
/// free-evolution scenario of the built-in code. Bloch vectors of nonzero
/// syndromes have no closed form and are reported as NaN; the probabilities
/// split evenly by symmetry.
pub fn run_analytic(
    scenario: &Scenario,
    code: &StabilizerCode,
    record_every: usize,
) -> Result<Vec<StepRecord>, DynamicsError> {
    scenario.validate()?;
    if scenario.omega != 0.0 {
        return Err(DynamicsError::Unsupported(String::from(
            "closed forms exist only for omega = 0; use the dense or block engine",
        )));
    }
    if code.k() != 1 || code.syndrome_count() != 4 {
        return Err(DynamicsError::Unsupported(format!(
            "closed forms are specific to the [[3,1]] phase code, got n={} k={}",
            code.n(),
            code.k()
        )));
    }
    let steps = scenario.steps();
    let record_every = record_every.max(1);
    let mut records = Vec::new();
    for step in (0..=steps).filter(|s| s.is_multiple_of(record_every) || *s == steps) {
        let t = step as f64 * scenario.dt;
        let p0 = p0_exact(t, scenario.gamma, scenario.gamma_prime, 3, 1.0);
        let rest = (1.0 - p0) / 3.0;
        let r0 = bloch_exact(
            t,
            scenario.gamma,
            scenario.gamma_prime,
            scenario.initial_bloch,
        );
        let f = fidelity_exact(
            t,
            scenario.gamma,
            scenario.gamma_prime,
            scenario.initial_bloch,
        );
        records.push(StepRecord {
            t,
            probs: vec![p0, rest, rest, rest],
            bloch: vec![r0, [f64::NAN; 3], [f64::NAN; 3], [f64::NAN; 3]],
            fidelity: f.clamp(0.0, 1.0),
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn p0_limits_and_spot_value() {
        // stationary value 0.4 at gamma = gamma' = 1, N = 3
        assert!((p0_exact(1e6, 1.0, 1.0, 3, 1.0) - 0.4).abs() < 1e-15);
        // no errors: stays at 1
        assert_eq!(p0_exact(3.0, 1.0, 0.0, 3, 1.0), 1.0);
        // t = 0.2: 0.4 + 0.6 e^{-1}
        let expected = 0.4 + 0.6 * exp(-1.0);
        assert!((p0_exact(0.2, 1.0, 1.0, 3, 1.0) - expected).abs() < 1e-15);
        assert!((expected - 0.620727664702865).abs() < 1e-12);
        // both rates zero: constant
        assert_eq!(p0_exact(5.0, 0.0, 0.0, 3, 0.7), 0.7);
        // closes on p0 alone: any starting value relaxes at the same rate
        let a = p0_exact(0.3, 2.0, 0.5, 3, 0.1);
        let expected = {
            let lambda: f64 = 2.0 + 4.0 * 0.5;
            let stat = 2.5 / lambda;
            stat + (0.1 - stat) * exp(-lambda * 0.3)
        };
        assert!((a - expected).abs() < 1e-15);
    }

    #[test]
    fn decay_rates_spot_values() {
        // gamma = 0, gamma' = 1 gives exactly (2, 6)
        let r = decay_rates(0.0, 1.0);
        assert_eq!(r.lambda_plus, 2.0);
        assert_eq!(r.lambda_minus, 6.0);
        assert_eq!(r.epsilon, None);
        assert_eq!(r.t_c, None);
        assert_eq!(r.t_2, None);
        // gamma' = 0: (0, gamma)
        let r = decay_rates(2.5, 0.0);
        assert_eq!(r.lambda_plus, 0.0);
        assert_eq!(r.lambda_minus, 2.5);
        assert_eq!(r.t_2, None);
        // gamma = gamma' = 1: 4.5 -+ sqrt(8.25)
        let r = decay_rates(1.0, 1.0);
        assert!((r.lambda_plus - 1.627718676730986).abs() < 1e-12);
        assert!((r.lambda_minus - 7.372281323269014).abs() < 1e-12);
        assert!((r.lambda - 5.0).abs() < 1e-15);
        assert_eq!(r.epsilon, Some(1.0));
    }

    #[test]
    fn rate_product_and_sum_identities() {
        // lambda+ lambda- = 12 gamma'^2 and lambda+ + lambda- = gamma + 8 gamma'
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..1000 {
            let g = rng.random::<f64>() * 10.0;
            let gp = rng.random::<f64>() * 10.0;
            let r = decay_rates(g, gp);
            assert!(r.lambda_plus >= -1e-12);
            assert!(r.lambda_plus <= r.lambda_minus);
            let scale = (g + gp).max(1.0);
            assert!(
                (r.lambda_plus * r.lambda_minus - 12.0 * gp * gp).abs() < 1e-12 * scale * scale
            );
            assert!((r.lambda_plus + r.lambda_minus - (g + 8.0 * gp)).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn transverse_solution_matches_a_direct_ode_solve() {
        // independent oracle: RK4 on the raw 2x2 system
        // d(y, vy) = [[-3g', g+g'], [3g', -(g+5g')]] (y, vy)
        let cases = [(1.0, 1.0), (0.0, 1.0), (2.0, 0.3), (5.0, 0.05)];
        for (g, gp) in cases {
            let mut y = 1.0f64;
            let mut v = 0.0f64;
            let dt = 1e-5;
            let rhs = |y: f64, v: f64| {
                (
                    -3.0 * gp * y + (g + gp) * v,
                    3.0 * gp * y - (g + 5.0 * gp) * v,
                )
            };
            for _ in 0..50_000 {
                let (k1y, k1v) = rhs(y, v);
                let (k2y, k2v) = rhs(y + dt / 2.0 * k1y, v + dt / 2.0 * k1v);
                let (k3y, k3v) = rhs(y + dt / 2.0 * k2y, v + dt / 2.0 * k2v);
                let (k4y, k4v) = rhs(y + dt * k3y, v + dt * k3v);
                y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
                v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            }
            let got = bloch_exact(0.5, g, gp, [0.0, 1.0, 0.0])[1];
            assert!(
                (got - y).abs() < 1e-10,
                "closed form vs ODE mismatch at g={g} gp={gp}: {got} vs {y}"
            );
        }
    }

    #[test]
    fn bloch_exact_initial_value_and_z_track() {
        let r0 = [0.3, -0.5, 0.7];
        let at0 = bloch_exact(0.0, 1.3, 0.4, r0);
        for i in 0..3 {
            assert!((at0[i] - r0[i]).abs() < 1e-15);
        }
        for t in [0.1, 0.7, 2.0] {
            let r = bloch_exact(t, 1.3, 0.4, r0);
            assert!((r[2] - 0.7 * p0_exact(t, 1.3, 0.4, 3, 1.0)).abs() < 1e-15);
            // degenerate branch: no rates, no motion
            assert_eq!(bloch_exact(t, 0.0, 0.0, r0), r0);
            assert_eq!(fidelity_exact(t, 0.0, 0.0, [0.6, 0.0, 0.8]), 1.0);
        }
    }

    #[test]
    fn fidelity_exact_protected_states_and_t_zero() {
        for (g, gp) in [(0.0, 1.0), (1.0, 1.0), (10.0, 0.1)] {
            for t in [0.0, 0.5, 3.0] {
                let f = fidelity_exact(t, g, gp, [0.0, 0.0, 1.0]);
                assert!((f - 1.0).abs() < 1e-12, "z-polarized state must stay ideal");
            }
        }
        let f0 = fidelity_exact(0.0, 2.0, 0.7, [0.6, 0.0, 0.8]);
        assert!((f0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_zero_reduces_to_the_no_correction_curve() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..10 {
            let t = rng.random::<f64>() * 3.0;
            let r0 = [0.4, 0.6, 0.2];
            let a = fidelity_exact(t, 0.0, 1.0, r0);
            let b = fidelity_no_correction(t, 1.0, r0);
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn no_correction_spot_value() {
        // F(0.1) at gamma' = 1, r0 = (0,1,0): (1 + (3 e^{-0.2} - e^{-0.6})/2)/2
        let f = fidelity_no_correction(0.1, 1.0, [0.0, 1.0, 0.0]);
        assert!((f - 0.976845155784980).abs() < 1e-12);
        assert!((fidelity_no_correction(0.0, 1.0, [0.0, 1.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fidelity_is_non_increasing_without_drive() {
        for (g, gp) in [(0.0, 1.0), (0.1, 1.0), (1.0, 1.0), (10.0, 1.0), (1.0, 0.1)] {
            for r0 in [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.5, 0.5]] {
                let mut prev = f64::INFINITY;
                for i in 0..200 {
                    let f = fidelity_exact(i as f64 * 0.05, g, gp, r0);
                    assert!(f <= prev + 1e-12);
                    prev = f;
                }
            }
        }
    }

    #[test]
    fn strong_correction_limits() {
        // epsilon -> 0: perfect correction
        let a = strong_correction(3.0, 1.0, 0.0, [0.0, 1.0, 0.0]);
        assert_eq!((a.z, a.y, a.fidelity), (0.0, 1.0, 1.0));
        let a = strong_correction(2.0, 1.0, 0.0, [0.0, 0.0, 1.0]);
        assert_eq!((a.z, a.fidelity), (1.0, 1.0));

        // 12 g e^2 overshoots the exact slow rate by exactly lambda-/gamma
        let (g, eps) = (1.0, 0.01);
        let r = decay_rates(g, g * eps);
        let ratio = 12.0 * g * eps * eps / r.lambda_plus;
        assert!((ratio - r.lambda_minus / g).abs() < 1e-10);
        assert!((1.07..1.09).contains(&ratio));
    }

    #[test]
    fn strong_correction_tracks_the_exact_fidelity() {
        // max_t |F_approx - F_exact| <= 1e-3 over [0, 10] at eps = 0.01
        let (g, eps) = (1.0, 0.01);
        let r0 = [0.0, 1.0, 0.0];
        let mut worst = 0.0f64;
        for i in 0..=1000 {
            let t = i as f64 * 0.01;
            let exact = fidelity_exact(t, g, g * eps, r0);
            let approx = strong_correction(t, g, eps, r0).fidelity;
            worst = worst.max((exact - approx).abs());
        }
        assert!(worst <= 1e-3, "max deviation {worst}");
    }

    #[test]
    fn analytic_run_has_the_shared_schema() {
        use crate::code::three_qubit_phase_code;
        let code = three_qubit_phase_code();
        let scenario = Scenario {
            gamma: 0.0,
            gamma_prime: 1.0,
            omega: 0.0,
            initial_bloch: [0.0, 1.0, 0.0],
            t_max: 1.0,
            dt: 1e-2,
        };
        let records = run_analytic(&scenario, &code, 10).unwrap();
        assert_eq!(records.len(), 11);
        for rec in &records {
            let sum: f64 = rec.probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(rec.bloch[1][0].is_nan());
        }
        // driven scenarios are refused
        let driven = Scenario {
            omega: 1.0,
            ..scenario
        };
        assert!(run_analytic(&driven, &code, 1).is_err());
    }
}
