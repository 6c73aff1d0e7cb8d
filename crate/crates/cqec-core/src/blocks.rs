//! Reduced dynamics on the diagonal syndrome blocks: each block carries a
//! probability p_m and an unnormalized Bloch vector r_m with
//! rho_m = (p_m I + r_m . sigma) / 2.
//!
//! The probabilities obey
//!
//! ```text
//! dp_m/dt = -(gamma (1 - d_m0) + N gamma') p_m
//!         + sum_a (d_m0 gamma p_a + gamma' p_{m XOR a})
//! ```
//!
//! and the Bloch vectors
//!
//! ```text
//! dr_m/dt = omega_m x r_m - (gamma (1 - d_m0) + N gamma') r_m
//!         + sum_a Lambda_a (gamma d_m0 r_a + gamma' r_{m XOR a})
//! ```
//!
//! where Lambda_a is the 3x3 Bloch rotation of conjugation by the recovery
//! unitary U_a, Lambda_ij = tr(sigma_i U sigma_j U†)/2. For Pauli U these
//! are diagonal with +-1 entries. This engine must agree with the dense one
//! to floating-point accuracy; the two share nothing but the RK4 step rule.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::code::StabilizerCode;
use crate::lindblad::{bloch_drive_vectors, drive_hamiltonian, DynamicsError};
use crate::matrix::{CMatrix, C64};
use crate::scenario::{Scenario, StepRecord};
use crate::tol;

/// Per-syndrome probabilities and unnormalized Bloch vectors (k = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SyndromeBlockState {
    pub probs: Vec<f64>,
    pub bloch: Vec<[f64; 3]>,
}

impl SyndromeBlockState {
    /// Everything in syndrome 0 with the given logical Bloch vector.
    pub fn syndrome_zero(syndrome_count: usize, bloch: [f64; 3]) -> Self {
        let mut probs = vec![0.0; syndrome_count];
        probs[0] = 1.0;
        let mut vecs = vec![[0.0; 3]; syndrome_count];
        vecs[0] = bloch;
        Self { probs, bloch: vecs }
    }

    pub fn syndrome_count(&self) -> usize {
        self.probs.len()
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > tol::PROBABILITY_SUM {
            return Err(DynamicsError::InvalidState(format!(
                "syndrome probabilities sum to {sum}"
            )));
        }
        for (m, (&p, r)) in self.probs.iter().zip(&self.bloch).enumerate() {
            if p < -tol::BLOCH_NORM_SLACK {
                return Err(DynamicsError::InvalidState(format!("p_{m} = {p} < 0")));
            }
            if norm3(*r) > p + tol::BLOCH_NORM_SLACK {
                return Err(DynamicsError::InvalidState(format!(
                    "block {m} has |r| = {} > p = {p}",
                    norm3(*r)
                )));
            }
        }
        Ok(())
    }

    fn axpy(&mut self, rhs: &SyndromeBlockState, k: f64) {
        for (a, b) in self.probs.iter_mut().zip(&rhs.probs) {
            *a += b * k;
        }
        for (a, b) in self.bloch.iter_mut().zip(&rhs.bloch) {
            for i in 0..3 {
                a[i] += b[i] * k;
            }
        }
    }
}

/// 3x3 real orthogonal Bloch-space representation of a logical unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaMatrix(pub [[f64; 3]; 3]);

impl LambdaMatrix {
    pub fn identity() -> Self {
        Self([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn apply(&self, r: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * r[0] + m[0][1] * r[1] + m[0][2] * r[2],
            m[1][0] * r[0] + m[1][1] * r[1] + m[1][2] * r[2],
            m[2][0] * r[0] + m[2][1] * r[1] + m[2][2] * r[2],
        ]
    }

    pub fn matmul(&self, rhs: &LambdaMatrix) -> LambdaMatrix {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    out[i][j] += self.0[i][k] * rhs.0[k][j];
                }
            }
        }
        LambdaMatrix(out)
    }

    pub fn orthogonality_residual(&self) -> f64 {
        let t = LambdaMatrix([
            [self.0[0][0], self.0[1][0], self.0[2][0]],
            [self.0[0][1], self.0[1][1], self.0[2][1]],
            [self.0[0][2], self.0[1][2], self.0[2][2]],
        ]);
        let prod = self.matmul(&t);
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                acc += (prod.0[i][j] - expect) * (prod.0[i][j] - expect);
            }
        }
        libm::sqrt(acc)
    }
}

fn pauli_sigma(i: usize) -> CMatrix {
    let z = C64::new(0.0, 0.0);
    match i {
        0 => CMatrix::from_rows(&[vec![z, C64::new(1.0, 0.0)], vec![C64::new(1.0, 0.0), z]]),
        1 => CMatrix::from_rows(&[vec![z, C64::new(0.0, -1.0)], vec![C64::new(0.0, 1.0), z]]),
        _ => CMatrix::from_rows(&[vec![C64::new(1.0, 0.0), z], vec![z, C64::new(-1.0, 0.0)]]),
    }
}

/// Bloch rotation of conjugation by a 2x2 unitary:
/// Lambda_ij = tr(sigma_i U sigma_j U†) / 2.
pub fn lambda_matrix(u: &CMatrix) -> Result<LambdaMatrix, DynamicsError> {
    if u.dim() != 2 {
        return Err(DynamicsError::SpecInvalid(String::from(
            "lambda_matrix needs a 2x2 unitary",
        )));
    }
    let ur = u.unitarity_residual();
    if ur > tol::STRUCTURAL {
        return Err(DynamicsError::SpecInvalid(format!(
            "lambda_matrix input is not unitary (residual {ur:.3e})"
        )));
    }
    let udag = u.dagger();
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        let si = pauli_sigma(i);
        for (j, entry) in row.iter_mut().enumerate() {
            let sj = pauli_sigma(j);
            let tr = si.matmul(u).matmul(&sj).matmul(&udag).trace();
            *entry = 0.5 * tr.re;
        }
    }
    Ok(LambdaMatrix(out))
}

/// Everything the block engine needs about a scenario: rates, per-syndrome
/// drive vectors, and the Lambda matrix of each nonzero syndrome.
#[derive(Debug, Clone)]
pub struct BlockParams {
    pub gamma: f64,
    pub gamma_prime: f64,
    /// omega_m for m = 0..N.
    pub drive: Vec<[f64; 3]>,
    /// Lambda_a for a = 1..N (index a - 1).
    pub lambdas: Vec<LambdaMatrix>,
}

impl BlockParams {
    pub fn for_scenario(scenario: &Scenario, code: &StabilizerCode) -> Result<Self, DynamicsError> {
        if code.k() != 1 {
            return Err(DynamicsError::Unsupported(String::from(
                "block dynamics needs k = 1",
            )));
        }
        let h = drive_hamiltonian(scenario.omega, code)?;
        let drive = bloch_drive_vectors(&h, code)?;
        let lambdas = (1..code.syndrome_count())
            .map(|a| lambda_matrix(&code.recovery_unitary(a)?))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            gamma: scenario.gamma,
            gamma_prime: scenario.gamma_prime,
            drive,
            lambdas,
        })
    }

    fn error_count(&self) -> usize {
        self.lambdas.len()
    }
}

/// dp/dt of the syndrome probabilities; conserves sum p identically.
pub fn probability_rhs(probs: &[f64], gamma: f64, gamma_prime: f64) -> Vec<f64> {
    let count = probs.len();
    let n_err = (count - 1) as f64;
    let mut out = vec![0.0; count];
    for (m, slot) in out.iter_mut().enumerate() {
        let damping = if m == 0 {
            n_err * gamma_prime
        } else {
            gamma + n_err * gamma_prime
        };
        let mut acc = -damping * probs[m];
        for a in 1..count {
            if m == 0 {
                acc += gamma * probs[a];
            }
            acc += gamma_prime * probs[m ^ a];
        }
        *slot = acc;
    }
    out
}

/// Full time derivative of a syndrome-block state.
pub fn bloch_rhs(state: &SyndromeBlockState, params: &BlockParams) -> SyndromeBlockState {
    let count = state.syndrome_count();
    let n_err = params.error_count() as f64;
    let (g, gp) = (params.gamma, params.gamma_prime);

    let probs = probability_rhs(&state.probs, g, gp);
    let mut bloch = vec![[0.0; 3]; count];
    for (m, slot) in bloch.iter_mut().enumerate() {
        let damping = if m == 0 { n_err * gp } else { g + n_err * gp };
        let mut acc = cross(params.drive[m], state.bloch[m]);
        for i in 0..3 {
            acc[i] -= damping * state.bloch[m][i];
        }
        for a in 1..count {
            let mut gain = [0.0; 3];
            for i in 0..3 {
                if m == 0 {
                    gain[i] += g * state.bloch[a][i];
                }
                gain[i] += gp * state.bloch[m ^ a][i];
            }
            let rotated = params.lambdas[a - 1].apply(gain);
            for i in 0..3 {
                acc[i] += rotated[i];
            }
        }
        *slot = acc;
    }
    SyndromeBlockState { probs, bloch }
}

/// Free-evolution reduced system of the three-qubit phase code
/// (Lambda_3 = diag(-1, -1, 1)), in the variables r = r_0 and
/// v = sum_a Lambda_a r_a:
///
/// ```text
/// dr/dt = -3 gamma' r + (gamma + gamma') v
/// dv/dt = -(gamma + 3 gamma') v + 3 gamma' r + 2 gamma' Lambda_3 v
/// ```
pub fn reduced_free_rhs(
    r: [f64; 3],
    v: [f64; 3],
    gamma: f64,
    gamma_prime: f64,
) -> ([f64; 3], [f64; 3]) {
    let lambda3_v = [-v[0], -v[1], v[2]];
    let mut dr = [0.0; 3];
    let mut dv = [0.0; 3];
    for i in 0..3 {
        dr[i] = -3.0 * gamma_prime * r[i] + (gamma + gamma_prime) * v[i];
        dv[i] = -(gamma + 3.0 * gamma_prime) * v[i]
            + 3.0 * gamma_prime * r[i]
            + 2.0 * gamma_prime * lambda3_v[i];
    }
    (dr, dv)
}

fn rk4_step(state: &SyndromeBlockState, params: &BlockParams, dt: f64) -> SyndromeBlockState {
    let k1 = bloch_rhs(state, params);
    let mut tmp = state.clone();
    tmp.axpy(&k1, dt / 2.0);
    let k2 = bloch_rhs(&tmp, params);
    let mut tmp = state.clone();
    tmp.axpy(&k2, dt / 2.0);
    let k3 = bloch_rhs(&tmp, params);
    let mut tmp = state.clone();
    tmp.axpy(&k3, dt);
    let k4 = bloch_rhs(&tmp, params);

    let mut out = state.clone();
    out.axpy(&k1, dt / 6.0);
    out.axpy(&k2, dt / 3.0);
    out.axpy(&k3, dt / 3.0);
    out.axpy(&k4, dt / 6.0);
    out
}

/// RK4 on the (N+1) * 4 dimensional block state; same step policy as the
/// dense engine so discretization errors match. Records every
/// `record_every`-th step plus the final one.
pub fn integrate_blocks(
    state0: &SyndromeBlockState,
    params: &BlockParams,
    t_max: f64,
    dt: f64,
    record_every: usize,
) -> Result<Vec<(f64, SyndromeBlockState)>, DynamicsError> {
    let steps = libm::round(t_max / dt).max(1.0) as usize;
    let record_every = record_every.max(1);
    let mut state = state0.clone();
    let mut out = Vec::new();
    for step in 0..=steps {
        if step.is_multiple_of(record_every) || step == steps {
            state
                .validate()
                .map_err(|e| DynamicsError::InvariantViolation {
                    step,
                    time: step as f64 * dt,
                    what: format!("{e}"),
                })?;
            out.push((step as f64 * dt, state.clone()));
        }
        if step < steps {
            state = rk4_step(&state, params, dt);
        }
    }
    Ok(out)
}

/// Recovered Bloch vector r_0 + sum_a Lambda_a r_a of a block state.
pub fn recovered_bloch(state: &SyndromeBlockState, lambdas: &[LambdaMatrix]) -> [f64; 3] {
    let mut acc = state.bloch[0];
    for (a, lam) in lambdas.iter().enumerate() {
        let rotated = lam.apply(state.bloch[a + 1]);
        for i in 0..3 {
            acc[i] += rotated[i];
        }
    }
    acc
}

/// Fidelity from block data: F = (1 + r_ideal . (r_0 + sum_a Lambda_a r_a)) / 2.
pub fn fidelity_from_blocks(
    state: &SyndromeBlockState,
    r_ideal: [f64; 3],
    lambdas: &[LambdaMatrix],
) -> f64 {
    let rec = recovered_bloch(state, lambdas);
    (0.5 * (1.0 + dot(r_ideal, rec))).clamp(0.0, 1.0)
}

/// Rotate `r` by angle |omega| t about the axis omega (Rodrigues), the
/// solution of dr/dt = omega x r.
pub fn rotate_bloch(r: [f64; 3], omega: [f64; 3], t: f64) -> [f64; 3] {
    let w = norm3(omega);
    if w == 0.0 {
        return r;
    }
    let axis = [omega[0] / w, omega[1] / w, omega[2] / w];
    let theta = w * t;
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    let axr = cross(axis, r);
    let ad = dot(axis, r) * (1.0 - c);
    [
        r[0] * c + axr[0] * s + axis[0] * ad,
        r[1] * c + axr[1] * s + axis[1] * ad,
        r[2] * c + axr[2] * s + axis[2] * ad,
    ]
}

/// Result of a block-engine run.
#[derive(Debug, Clone)]
pub struct BlockRun {
    pub records: Vec<StepRecord>,
}

/// Run the block engine for a scenario, emitting the shared record schema.
pub fn run_block(
    scenario: &Scenario,
    code: &StabilizerCode,
    record_every: usize,
) -> Result<BlockRun, DynamicsError> {
    scenario.validate()?;
    let params = BlockParams::for_scenario(scenario, code)?;
    let state0 = SyndromeBlockState::syndrome_zero(code.syndrome_count(), scenario.initial_bloch);
    let series = integrate_blocks(&state0, &params, scenario.t_max, scenario.dt, record_every)?;
    let records = series
        .into_iter()
        .map(|(t, state)| {
            let r_ideal = rotate_bloch(scenario.initial_bloch, params.drive[0], t);
            let fidelity = fidelity_from_blocks(&state, r_ideal, &params.lambdas);
            StepRecord {
                t,
                probs: state.probs,
                bloch: state.bloch,
                fidelity,
            }
        })
        .collect();
    Ok(BlockRun { records })
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: [f64; 3]) -> f64 {
    libm::sqrt(dot(a, a))
}
