//! Shared scenario description and the per-step record schema every engine
//! emits.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

/// Physics of one run: rates, drive, initial logical state, time grid.
///
/// Rates are inverse time, `omega` is an angular frequency, and the initial
/// Bloch vector describes the encoded logical qubit (it must fit inside the
/// Bloch ball). The state starts wholly in the syndrome-0 sector.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Corrective-jump rate, one shared rate for every R_m channel.
    pub gamma: f64,
    /// Error-jump rate, one shared rate for every E_a channel.
    pub gamma_prime: f64,
    /// Drive strength: H0 = omega * X_n / 2 acting on the encoded qubit.
    pub omega: f64,
    /// Logical Bloch vector at t = 0.
    pub initial_bloch: [f64; 3],
    pub t_max: f64,
    pub dt: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid scenario: {0}")]
pub struct ScenarioError(pub String);

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        // NaN is caught by the finiteness checks before any comparison
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(ScenarioError(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !self.t_max.is_finite() || self.t_max < self.dt {
            return Err(ScenarioError(format!(
                "t_max must be at least dt, got t_max={} dt={}",
                self.t_max, self.dt
            )));
        }
        for (name, v) in [("gamma", self.gamma), ("gamma_prime", self.gamma_prime)] {
            if !v.is_finite() || v < 0.0 {
                return Err(ScenarioError(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !self.omega.is_finite() {
            return Err(ScenarioError(format!(
                "omega must be finite, got {}",
                self.omega
            )));
        }
        let norm = self.bloch_norm();
        if norm.is_nan() || norm > 1.0 + 1e-12 {
            return Err(ScenarioError(format!(
                "initial Bloch vector has norm {norm} > 1 (unphysical)"
            )));
        }
        Ok(())
    }

    pub fn bloch_norm(&self) -> f64 {
        let [x, y, z] = self.initial_bloch;
        libm::sqrt(x * x + y * y + z * z)
    }

    /// Number of RK4 steps: t_max / dt rounded to the nearest integer.
    pub fn steps(&self) -> usize {
        let s = libm::round(self.t_max / self.dt);
        (s as usize).max(1)
    }
}

/// One row of engine output: time, syndrome probabilities, per-syndrome
/// Bloch vectors, and the recovered fidelity.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub probs: Vec<f64>,
    pub bloch: Vec<[f64; 3]>,
    pub fidelity: f64,
}

impl StepRecord {
    /// Column names in output order: t, p0..pN, r0x..rNz, fidelity.
    pub fn column_names(syndrome_count: usize) -> Vec<String> {
        let mut names = Vec::with_capacity(2 + 4 * syndrome_count);
        names.push(String::from("t"));
        for m in 0..syndrome_count {
            names.push(format!("p{m}"));
        }
        for m in 0..syndrome_count {
            for axis in ["x", "y", "z"] {
                names.push(format!("r{m}{axis}"));
            }
        }
        names.push(String::from("fidelity"));
        names
    }

    /// Values in the same order as [`StepRecord::column_names`].
    pub fn values(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(2 + 4 * self.probs.len());
        row.push(self.t);
        row.extend_from_slice(&self.probs);
        for r in &self.bloch {
            row.extend_from_slice(r);
        }
        row.push(self.fidelity);
        row
    }
}
