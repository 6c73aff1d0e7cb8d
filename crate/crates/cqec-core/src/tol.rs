//! Numerical tolerances shared by the engines and their validation checks.
//!
//! The built-in code matrices have exact 0/±1/±i entries, so structural
//! residuals (unitarity, commutation, recovery-operator completeness) are
//! pure floating-point noise and are held to 1e-12. Tolerances on integrated
//! quantities are looser and account for RK4 discretization drift.

/// Structural residuals on exactly-representable matrices (unitarity of the
/// logical basis, sum rule for recovery operators, block extraction).
pub const STRUCTURAL: f64 = 1e-12;

/// Hermiticity residual allowed on a density matrix (Frobenius norm).
pub const HERMITICITY: f64 = 1e-10;

/// Trace drift allowed over a full integration run.
pub const TRACE_DRIFT: f64 = 1e-8;

/// Most negative eigenvalue a monitored density matrix may develop.
pub const POSITIVITY: f64 = -1e-8;

/// Probability-sum drift allowed on syndrome-block states.
pub const PROBABILITY_SUM: f64 = 1e-10;

/// Slack on the per-block polarization bound |r_m| <= p_m.
pub const BLOCH_NORM_SLACK: f64 = 1e-9;

/// Stability guard for fixed-step RK4: warn when dt * (gamma + N*gamma' + omega)
/// exceeds this.
pub const STEP_GUARD: f64 = 0.1;

/// Largest per-step total jump probability the trajectory unraveling accepts.
pub const JUMP_PROBABILITY_CAP: f64 = 0.05;
