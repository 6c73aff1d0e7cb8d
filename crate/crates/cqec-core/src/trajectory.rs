//! Stochastic quantum-jump unraveling of the master equation.
//!
//! Each trajectory is a pure state evolving deterministically between jumps
//! and renormalized after each jump; averaging |psi><psi| over trajectories
//! converges to the dense Lindblad solution at the Monte Carlo rate 1/sqrt(n).
//!
//! The scheme is first order with a fixed step and at most one jump per
//! step: the per-channel jump probability is rate * |J psi|^2 * dt. Because
//! the corrective family satisfies sum R†R = I and the errors are unitary,
//! the total jump probability per step is (gamma + N gamma') dt regardless
//! of the state, and the no-jump evolution is exactly the drive unitary
//! exp(-i H0 dt) (the non-Hermitian part of the effective generator is
//! proportional to the identity and cancels on renormalization).
//!
//! Trajectory i draws from a dedicated counter-based stream: ChaCha8 seeded
//! by the run seed with stream index i. The unraveling is therefore a pure
//! function of (seed, index) and any execution order — sequential, threaded,
//! interleaved — reproduces bit-identical paths.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::code::StabilizerCode;
use crate::lindblad::{build_spec, fidelity, DynamicsError, LindbladSpec};
use crate::matrix::{accumulate_outer, unitary_evolution, CMatrix, CVector};
use crate::scenario::{Scenario, StepRecord};
use crate::tol;

/// Monte Carlo run description on top of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub scenario: Scenario,
    pub n_trajectories: usize,
    pub seed: u64,
    /// Observation times; snapped to the scenario's step grid.
    pub sample_times: Vec<f64>,
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.scenario.validate()?;
        if self.n_trajectories == 0 {
            return Err(DynamicsError::SpecInvalid(String::from(
                "need at least one trajectory",
            )));
        }
        if self.sample_times.is_empty() {
            return Err(DynamicsError::SpecInvalid(String::from("no sample times")));
        }
        for &t in &self.sample_times {
            if !(0.0..=self.scenario.t_max + 1e-12).contains(&t) {
                return Err(DynamicsError::SpecInvalid(format!(
                    "sample time {t} outside [0, t_max]"
                )));
            }
        }
        Ok(())
    }
}

/// A jump event: the step index at which it fired and which channel did.
/// Channels are numbered corrective first (0..=N), then errors (N+1..2N).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub step: usize,
    pub channel: usize,
}

/// Prebuilt unraveling of one scenario: jump channels, the per-step drive
/// unitary, and the sampling grid.
pub struct TrajectoryEngine {
    channels: Vec<(CMatrix, f64)>,
    step_unitary: CMatrix,
    drive_is_trivial: bool,
    psi0: CVector,
    dt: f64,
    steps: usize,
    sample_steps: Vec<usize>,
    /// (step, slot) pairs sorted by step, for O(1) sampling inside the loop.
    sample_order: Vec<(usize, usize)>,
    total_jump_rate: f64,
    n_corrective: usize,
}

impl TrajectoryEngine {
    pub fn new(config: &TrajectoryConfig, code: &StabilizerCode) -> Result<Self, DynamicsError> {
        config.validate()?;
        let scenario = &config.scenario;
        if code.k() != 1 {
            return Err(DynamicsError::Unsupported(String::from(
                "trajectory unraveling needs k = 1",
            )));
        }
        // trajectories are pure states; a mixed initial vector has no single
        // state-vector representation
        if (scenario.bloch_norm() - 1.0).abs() > 1e-12 {
            return Err(DynamicsError::Unsupported(format!(
                "trajectory unraveling needs a pure initial state, |r| = {}",
                scenario.bloch_norm()
            )));
        }
        let spec = build_spec(scenario, code)?;
        Self::from_spec(config, code, &spec)
    }

    fn from_spec(
        config: &TrajectoryConfig,
        code: &StabilizerCode,
        spec: &LindbladSpec,
    ) -> Result<Self, DynamicsError> {
        let scenario = &config.scenario;
        let n_corrective = spec.corrective.len();
        let channels: Vec<(CMatrix, f64)> = spec
            .corrective
            .iter()
            .chain(&spec.error_channels)
            .map(|(op, rate)| (op.clone(), *rate))
            .collect();
        // sum R†R = I and unitary errors make the total rate state-free
        let total_jump_rate = spec.corrective.first().map(|(_, r)| *r).unwrap_or(0.0)
            + spec.error_channels.iter().map(|(_, r)| *r).sum::<f64>();
        let dt = scenario.dt;
        if total_jump_rate * dt > tol::JUMP_PROBABILITY_CAP {
            return Err(DynamicsError::SpecInvalid(format!(
                "per-step jump probability {:.3} exceeds the cap {}; reduce dt",
                total_jump_rate * dt,
                tol::JUMP_PROBABILITY_CAP
            )));
        }
        let steps = scenario.steps();
        let sample_steps: Vec<usize> = config
            .sample_times
            .iter()
            .map(|&t| (libm::round(t / dt) as usize).min(steps))
            .collect();
        let mut sample_order: Vec<(usize, usize)> = sample_steps
            .iter()
            .enumerate()
            .map(|(slot, &s)| (s, slot))
            .collect();
        sample_order.sort_unstable();

        let [x, y, z] = scenario.initial_bloch;
        // Bloch vector to spinor: (cos(theta/2), e^{i phi} sin(theta/2))
        let theta = libm::acos(z.clamp(-1.0, 1.0));
        let phi = libm::atan2(y, x);
        let chi = CVector::from_slice(&[
            crate::matrix::C64::new(libm::cos(theta / 2.0), 0.0),
            crate::matrix::C64::new(
                libm::cos(phi) * libm::sin(theta / 2.0),
                libm::sin(phi) * libm::sin(theta / 2.0),
            ),
        ]);
        let psi0 = code.encode_vector(&chi);

        let step_unitary = unitary_evolution(&spec.hamiltonian, dt);
        let drive_is_trivial = spec.hamiltonian.max_abs() == 0.0;

        Ok(Self {
            channels,
            step_unitary,
            drive_is_trivial,
            psi0,
            dt,
            steps,
            sample_steps,
            sample_order,
            total_jump_rate,
            n_corrective,
        })
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.sample_steps
            .iter()
            .map(|&s| s as f64 * self.dt)
            .collect()
    }

    /// Deterministic pure-state path of one trajectory, sampled on the
    /// configured grid, together with its jump log.
    pub fn sample_trajectory(&self, seed: u64, index: u64) -> (Vec<CVector>, Vec<JumpEvent>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);

        let mut psi = self.psi0.clone();
        let mut samples = vec![CVector::zeros(self.psi0.len()); self.sample_steps.len()];
        let mut jumps = Vec::new();
        let jump_prob = self.total_jump_rate * self.dt;
        let mut next_sample = 0usize;

        for step in 0..=self.steps {
            while next_sample < self.sample_order.len() && self.sample_order[next_sample].0 == step
            {
                samples[self.sample_order[next_sample].1] = psi.clone();
                next_sample += 1;
            }
            if step == self.steps {
                break;
            }
            if self.total_jump_rate > 0.0 && rng.random::<f64>() < jump_prob {
                // select a channel proportionally to rate * |J psi|^2
                let weights: Vec<f64> = self
                    .channels
                    .iter()
                    .map(|(op, rate)| rate * op.matvec(&psi).norm_sqr())
                    .collect();
                let total: f64 = weights.iter().sum();
                let mut pick = rng.random::<f64>() * total;
                let mut chosen = self.channels.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if pick < *w {
                        chosen = i;
                        break;
                    }
                    pick -= w;
                }
                let jumped = self.channels[chosen].0.matvec(&psi);
                let norm = jumped.norm();
                if norm < 1e-12 {
                    // zero-weight channels are never selected; guard anyway
                    continue;
                }
                let mut jumped = jumped;
                jumped.scale_mut(1.0 / norm);
                psi = jumped;
                jumps.push(JumpEvent {
                    step,
                    channel: chosen,
                });
            } else if !self.drive_is_trivial {
                psi = self.step_unitary.matvec(&psi);
            }
        }
        (samples, jumps)
    }

    /// Index of the first error-channel jump, if any.
    pub fn first_error_jump(&self, jumps: &[JumpEvent]) -> Option<usize> {
        jumps
            .iter()
            .find(|j| j.channel >= self.n_corrective)
            .map(|j| j.step)
    }
}

/// Ensemble average (1/n) sum |psi_i><psi_i| at each sample time, summed in
/// index order for reproducibility.
pub fn ensemble_average(
    engine: &TrajectoryEngine,
    seed: u64,
    n_trajectories: usize,
) -> Vec<CMatrix> {
    let dim = engine.psi0.len();
    let mut acc = vec![CMatrix::zeros(dim); engine.sample_steps.len()];
    let w = 1.0 / n_trajectories as f64;
    for index in 0..n_trajectories {
        let (samples, _) = engine.sample_trajectory(seed, index as u64);
        for (slot, psi) in samples.iter().enumerate() {
            accumulate_outer(&mut acc[slot], psi, w);
        }
    }
    acc
}

/// Per-trajectory observables at every sample time, in record order
/// (probabilities, Bloch components, fidelity). All of these are linear in
/// |psi><psi|, so their trajectory means equal the ensemble-state values.
pub fn trajectory_observables(
    engine: &TrajectoryEngine,
    code: &StabilizerCode,
    recovery_ops: &[CMatrix],
    ideal_states: &[CMatrix],
    seed: u64,
    index: u64,
) -> Result<Vec<Vec<f64>>, DynamicsError> {
    let (samples, _) = engine.sample_trajectory(seed, index);
    samples
        .iter()
        .zip(ideal_states)
        .map(|(psi, ideal)| {
            let rho = psi.outer();
            let blocks = crate::lindblad::syndrome_blocks(&rho, code);
            let f = fidelity(&rho, ideal, recovery_ops)?;
            let mut row = blocks.probs.clone();
            for r in blocks.bloch.as_ref().expect("k = 1") {
                row.extend_from_slice(r);
            }
            row.push(f);
            Ok(row)
        })
        .collect()
}

/// Result of an ensemble run: mean records plus standard errors per column.
#[derive(Debug, Clone)]
pub struct McRun {
    pub records: Vec<StepRecord>,
    /// Standard errors in the same column order as the record values
    /// (excluding the time column).
    pub standard_errors: Vec<Vec<f64>>,
}

/// Full Monte Carlo engine run emitting the shared record schema at the
/// sample times. The reduction is a sequential Welford pass in trajectory
/// index order, so results are bit-identical for a fixed (seed, config).
pub fn run_mc(config: &TrajectoryConfig, code: &StabilizerCode) -> Result<McRun, DynamicsError> {
    let engine = TrajectoryEngine::new(config, code)?;
    let recovery_ops = code.recovery_operators()?;
    let ideals = ideal_states(&engine);
    let rows: Vec<Vec<Vec<f64>>> = (0..config.n_trajectories)
        .map(|i| {
            trajectory_observables(&engine, code, &recovery_ops, &ideals, config.seed, i as u64)
        })
        .collect::<Result<_, _>>()?;
    reduce_mc(config, code, &engine, rows)
}

/// Drive-only evolution of the initial pure state at the sample times, as
/// density matrices; the fidelity references of an MC run.
pub fn ideal_states(engine: &TrajectoryEngine) -> Vec<CMatrix> {
    let mut out = vec![CMatrix::zeros(engine.psi0.len()); engine.sample_steps.len()];
    let mut psi = engine.psi0.clone();
    let mut step = 0usize;
    for &(s, slot) in &engine.sample_order {
        while step < s {
            if !engine.drive_is_trivial {
                psi = engine.step_unitary.matvec(&psi);
            }
            step += 1;
        }
        out[slot] = psi.outer();
    }
    out
}

/// Welford reduction of per-trajectory observable rows into means and
/// standard errors; exposed separately so callers may generate the rows in
/// parallel (collected in index order) and still reduce identically.
pub fn reduce_mc(
    config: &TrajectoryConfig,
    code: &StabilizerCode,
    engine: &TrajectoryEngine,
    rows: Vec<Vec<Vec<f64>>>,
) -> Result<McRun, DynamicsError> {
    let times = engine.sample_times();
    let n_cols = 4 * code.syndrome_count() + 1;
    let mut mean = vec![vec![0.0f64; n_cols]; times.len()];
    let mut m2 = vec![vec![0.0f64; n_cols]; times.len()];
    let mut count = 0.0f64;
    for row in &rows {
        count += 1.0;
        for (slot, obs) in row.iter().enumerate() {
            for (c, &v) in obs.iter().enumerate() {
                let delta = v - mean[slot][c];
                mean[slot][c] += delta / count;
                m2[slot][c] += delta * (v - mean[slot][c]);
            }
        }
    }
    let n = config.n_trajectories as f64;
    let records = times
        .iter()
        .zip(&mean)
        .map(|(&t, row)| {
            let count = code.syndrome_count();
            let probs = row[..count].to_vec();
            let bloch = (0..count)
                .map(|m| {
                    [
                        row[count + 3 * m],
                        row[count + 3 * m + 1],
                        row[count + 3 * m + 2],
                    ]
                })
                .collect();
            StepRecord {
                t,
                probs,
                bloch,
                fidelity: row[n_cols - 1],
            }
        })
        .collect();
    let standard_errors = m2
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| {
                    if n > 1.0 {
                        libm::sqrt(v / (n - 1.0) / n)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(McRun {
        records,
        standard_errors,
    })
}
