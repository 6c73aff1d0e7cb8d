//! Cross-validation of the four engines against each other. The dense
//! integrator is the ground truth; the block ODEs, the closed forms, and
//! the trajectory ensemble must all reproduce it.

use cqec_core::analytic;
use cqec_core::blocks;
use cqec_core::code::three_qubit_phase_code;
use cqec_core::fit;
use cqec_core::lindblad::{self, build_spec, embed_initial_state, run_dense, IntegrationOptions};
use cqec_core::matrix::CMatrix;
use cqec_core::scenario::Scenario;
use cqec_core::trajectory::{ensemble_average, TrajectoryConfig, TrajectoryEngine};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_record_deviation(a: &[cqec_core::StepRecord], b: &[cqec_core::StepRecord]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        assert!((x.t - y.t).abs() < 1e-12);
        for (u, v) in x.values().iter().zip(y.values()) {
            if u.is_nan() || v.is_nan() {
                continue;
            }
            worst = worst.max((u - v).abs());
        }
    }
    worst
}

#[test]
fn dense_and_block_trajectories_agree_on_random_tuples() {
    let code = three_qubit_phase_code();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..10 {
        let dir = [
            rng.random::<f64>() - 0.5,
            rng.random::<f64>() - 0.5,
            rng.random::<f64>() - 0.5,
        ];
        let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        let scale = rng.random::<f64>(); // anywhere inside the Bloch ball
        let scenario = Scenario {
            gamma: rng.random::<f64>() * 3.0,
            gamma_prime: rng.random::<f64>() * 3.0,
            omega: (rng.random::<f64>() - 0.5) * 4.0,
            initial_bloch: [
                dir[0] / norm * scale,
                dir[1] / norm * scale,
                dir[2] / norm * scale,
            ],
            t_max: 5.0,
            dt: 1e-3,
        };
        let dense = run_dense(
            &scenario,
            &code,
            &IntegrationOptions {
                record_every: 5,
                positivity_every: 100,
            },
        )
        .unwrap();
        let block = blocks::run_block(&scenario, &code, 5).unwrap();
        let worst = max_record_deviation(&dense.records, &block.records);
        assert!(
            worst <= 1e-7,
            "case {case}: dense/block deviation {worst} for {scenario:?}"
        );
        // syndrome-diagonal initial data and a block-diagonal drive keep the
        // off-diagonal blocks empty
        assert!(
            dense.offdiag_max <= 1e-9,
            "block closure violated: {}",
            dense.offdiag_max
        );
    }
}

#[test]
fn closed_forms_match_both_integrators() {
    let code = three_qubit_phase_code();
    let s = 1.0 / 2.0_f64.sqrt();
    for gamma in [0.0, 1.0] {
        for gamma_prime in [0.1, 1.0] {
            for bloch in [[0.0, 1.0, 0.0], [s, 0.0, s]] {
                let scenario = Scenario {
                    gamma,
                    gamma_prime,
                    omega: 0.0,
                    initial_bloch: bloch,
                    t_max: 2.0,
                    dt: 1e-3,
                };
                let dense = run_dense(
                    &scenario,
                    &code,
                    &IntegrationOptions {
                        record_every: 20,
                        positivity_every: 50,
                    },
                )
                .unwrap();
                let closed = analytic::run_analytic(&scenario, &code, 20).unwrap();
                let worst = max_record_deviation(&dense.records, &closed);
                assert!(
                    worst <= 1e-6,
                    "analytic vs dense deviation {worst} at g={gamma}, g'={gamma_prime}"
                );
                let block = blocks::run_block(&scenario, &code, 20).unwrap();
                let worst = max_record_deviation(&block.records, &closed);
                assert!(worst <= 1e-6, "analytic vs block deviation {worst}");
            }
        }
    }
}

#[test]
fn transverse_closed_form_matches_block_integration_pointwise() {
    let code = three_qubit_phase_code();
    let scenario = Scenario {
        gamma: 1.0,
        gamma_prime: 1.0,
        omega: 0.0,
        initial_bloch: [0.0, 1.0, 0.0],
        t_max: 0.5,
        dt: 1e-4,
    };
    let block = blocks::run_block(&scenario, &code, 5000).unwrap();
    let last = block.records.last().unwrap();
    let expected = analytic::bloch_exact(0.5, 1.0, 1.0, [0.0, 1.0, 0.0]);
    assert!((last.bloch[0][1] - expected[1]).abs() <= 1e-8);
}

#[test]
fn p0_closed_form_and_relaxation_rate() {
    let code = three_qubit_phase_code();
    let scenario = Scenario {
        gamma: 1.0,
        gamma_prime: 1.0,
        omega: 0.0,
        initial_bloch: [0.0, 1.0, 0.0],
        t_max: 5.0,
        dt: 1e-3,
    };
    let dense = run_dense(&scenario, &code, &IntegrationOptions::default()).unwrap();

    // p0(t) follows the closed form everywhere
    let mut worst = 0.0f64;
    for rec in &dense.records {
        let expected = analytic::p0_exact(rec.t, 1.0, 1.0, 3, 1.0);
        worst = worst.max((rec.probs[0] - expected).abs());
    }
    assert!(worst <= 1e-6, "p0 deviation {worst}");

    // stationary value and fitted relaxation rate
    let p_inf = 0.4;
    let last = dense.records.last().unwrap();
    assert!((last.probs[0] - p_inf).abs() < 1e-5);
    let window: Vec<&cqec_core::StepRecord> = dense.records.iter().filter(|r| r.t <= 1.0).collect();
    let ts: Vec<f64> = window.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = window.iter().map(|r| r.probs[0] - p_inf).collect();
    let rate = fit::fitted_decay_rate(&ts, &ys).unwrap();
    assert!(
        (rate - 5.0).abs() / 5.0 < 1e-3,
        "fitted relaxation rate {rate} vs lambda = 5"
    );
}

#[test]
fn strong_correction_keeps_the_normalized_state_nearly_pure() {
    // over times long against 1/gamma but short against the slow timescale,
    // the normalized syndrome-0 state r_0/p_0 stays on the Bloch sphere
    let code = three_qubit_phase_code();
    let scenario = Scenario {
        gamma: 1.0,
        gamma_prime: 0.01,
        omega: 0.0,
        initial_bloch: [0.0, 1.0, 0.0],
        t_max: 3.0,
        dt: 1e-3,
    };
    let run = blocks::run_block(&scenario, &code, 10).unwrap();
    for rec in run.records.iter().filter(|r| r.t >= 1.0) {
        let r0 = rec.bloch[0];
        let norm = (r0[0] * r0[0] + r0[1] * r0[1] + r0[2] * r0[2]).sqrt();
        let purity = norm / rec.probs[0];
        assert!(
            (0.99..=1.0 + 1e-9).contains(&purity),
            "normalized polarization {purity} at t = {}",
            rec.t
        );
    }
}

#[test]
fn ensemble_fidelity_matches_the_closed_form_within_errors() {
    let code = three_qubit_phase_code();
    let n = 2000usize;
    let config = TrajectoryConfig {
        scenario: Scenario {
            gamma: 1.0,
            gamma_prime: 1.0,
            omega: 0.0,
            initial_bloch: [0.0, 1.0, 0.0],
            t_max: 2.0,
            dt: 2e-4,
        },
        n_trajectories: n,
        seed: 4242,
        sample_times: (0..=8).map(|i| i as f64 * 0.25).collect(),
    };
    let run = cqec_core::trajectory::run_mc(&config, &code).unwrap();
    let f_col = 4 * code.syndrome_count();
    for (slot, rec) in run.records.iter().enumerate() {
        let expected = analytic::fidelity_exact(rec.t, 1.0, 1.0, [0.0, 1.0, 0.0]);
        let se = run.standard_errors[slot][f_col];
        let slack = 3.0 * se + 1e-12;
        assert!(
            (rec.fidelity - expected).abs() <= slack,
            "t = {}: MC fidelity {} vs closed form {expected} (3 se = {})",
            rec.t,
            rec.fidelity,
            3.0 * se
        );
    }
}

#[test]
fn ensemble_error_scales_as_inverse_sqrt_n() {
    let code = three_qubit_phase_code();
    let scenario = Scenario {
        gamma: 1.0,
        gamma_prime: 1.0,
        omega: 0.0,
        initial_bloch: [0.0, 1.0, 0.0],
        t_max: 2.0,
        dt: 2e-4,
    };
    let sample_times: Vec<f64> = (1..=4).map(|i| i as f64 * 0.5).collect();

    // dense reference states at the sample times
    let spec = build_spec(&scenario, &code).unwrap();
    let rho0 = embed_initial_state(&code, scenario.initial_bloch).unwrap();
    let sample_steps: Vec<usize> = sample_times
        .iter()
        .map(|&t| (t / scenario.dt).round() as usize)
        .collect();
    let mut references: Vec<CMatrix> = Vec::new();
    lindblad::integrate(
        &rho0,
        &spec,
        scenario.t_max,
        scenario.dt,
        &IntegrationOptions {
            record_every: 1,
            positivity_every: 2500,
        },
        |step, _, rho| {
            if sample_steps.contains(&step) {
                references.push(rho.clone());
            }
            Ok(())
        },
    )
    .unwrap();
    assert_eq!(references.len(), sample_times.len());

    let mut log_n = Vec::new();
    let mut log_err = Vec::new();
    for n in [100usize, 1000, 10_000] {
        let config = TrajectoryConfig {
            scenario: scenario.clone(),
            n_trajectories: n,
            seed: 7001,
            sample_times: sample_times.clone(),
        };
        let engine = TrajectoryEngine::new(&config, &code).unwrap();
        let avg = ensemble_average(&engine, config.seed, n);
        let mean_err: f64 = avg
            .iter()
            .zip(&references)
            .map(|(a, b)| (a - b).frobenius_norm())
            .sum::<f64>()
            / references.len() as f64;
        // and the stated absolute bound at each n
        assert!(
            mean_err <= 5.0 / (n as f64).sqrt(),
            "MC error {mean_err} at n = {n} exceeds 5/sqrt(n)"
        );
        log_n.push((n as f64).ln());
        log_err.push(mean_err.ln());
    }
    let (_, slope) = fit::linear_fit(&log_n, &log_err).unwrap();
    assert!(
        (-0.6..=-0.4).contains(&slope),
        "convergence exponent {slope} outside [-0.6, -0.4]"
    );
}
