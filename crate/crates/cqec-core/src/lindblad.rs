//! Dense master-equation engine on the full 2^n-dimensional Hilbert space.
//!
//! The generator combines a Hamiltonian commutator, corrective quantum-jump
//! channels R_m (one per syndrome, resetting it to zero while undoing the
//! logical rotation), and environmental error channels E_a:
//!
//! ```text
//! d rho/dt = -i [H0, rho]
//!          + sum_m gamma_m (R_m rho R_m† - {R_m†R_m, rho}/2)
//!          + sum_a gamma'_a (E_a rho E_a† - {E_a†E_a, rho}/2)
//! ```
//!
//! With uniform rates, unitary errors, and the completeness relation
//! sum R†R = I this collapses to
//! `-i[H0,rho] - (gamma + N gamma') rho + gamma sum R rho R† + gamma' sum E rho E†`.
//!
//! Integration is fixed-step classical RK4; Hermiticity and trace are
//! re-checked at every recorded step, positivity is monitored periodically,
//! and violations abort with the offending step named. This engine is the
//! ground truth the reduced engines are validated against.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::code::{apply_recovery, CodeError, StabilizerCode};
use crate::matrix::{min_eigenvalue, unitary_evolution, CMatrix, C64};
use crate::pauli::PauliOperator;
use crate::scenario::{Scenario, ScenarioError, StepRecord};
use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("invalid Lindblad specification: {0}")]
    SpecInvalid(String),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("integration failure at step {step} (t = {time}): {what}")]
    InvariantViolation {
        step: usize,
        time: f64,
        what: String,
    },
    #[error("numerical consistency check failed: {0}")]
    NumericalConsistency(String),
    #[error("{0}")]
    Unsupported(String),
}

/// Dense 2^n x 2^n density matrix, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Wrap a matrix after checking Hermiticity, unit trace, and positivity
    /// (each within the integration-drift tolerances).
    pub fn new(mat: CMatrix) -> Result<Self, DynamicsError> {
        let herm = mat.hermiticity_residual();
        if herm > tol::HERMITICITY {
            return Err(DynamicsError::InvalidState(format!(
                "hermiticity residual {herm:.3e}"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol::TRACE_DRIFT || tr.im.abs() > tol::HERMITICITY {
            return Err(DynamicsError::InvalidState(format!("trace {tr} != 1")));
        }
        let min = min_eigenvalue(&mat);
        if min < tol::POSITIVITY {
            return Err(DynamicsError::InvalidState(format!(
                "minimum eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { mat })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }
}

/// Full master-equation specification: Hamiltonian plus two jump families.
#[derive(Debug, Clone)]
pub struct LindbladSpec {
    pub hamiltonian: CMatrix,
    /// (R_m, gamma_m); the family must satisfy sum R†R = I.
    pub corrective: Vec<(CMatrix, f64)>,
    /// (E_a, gamma'_a).
    pub error_channels: Vec<(CMatrix, f64)>,
}

impl LindbladSpec {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let dim = self.hamiltonian.dim();
        let herm = self.hamiltonian.hermiticity_residual();
        if herm > tol::STRUCTURAL {
            return Err(DynamicsError::SpecInvalid(format!(
                "Hamiltonian is not Hermitian (residual {herm:.3e})"
            )));
        }
        for (op, rate) in self.corrective.iter().chain(&self.error_channels) {
            if op.dim() != dim {
                return Err(DynamicsError::SpecInvalid(String::from(
                    "channel dimension mismatch",
                )));
            }
            if !rate.is_finite() || *rate < 0.0 {
                return Err(DynamicsError::SpecInvalid(format!("channel rate {rate}")));
            }
        }
        let mut sum = CMatrix::zeros(dim);
        for (r, _) in &self.corrective {
            sum = &sum + &r.dagger().matmul(r);
        }
        let res = (&sum - &CMatrix::identity(dim)).frobenius_norm();
        if res > tol::STRUCTURAL {
            return Err(DynamicsError::SpecInvalid(format!(
                "corrective family violates sum R†R = I (residual {res:.3e})"
            )));
        }
        Ok(())
    }

    /// Total decay rate entering the step-size guard.
    pub fn total_rate(&self) -> f64 {
        let g = self.corrective.iter().map(|(_, r)| *r).fold(0.0, f64::max);
        let ge: f64 = self.error_channels.iter().map(|(_, r)| *r).sum();
        g + ge
    }
}

/// Initial state C (|0><0| (x) (I + r.sigma)/2) C†: the given logical Bloch
/// vector embedded in the syndrome-0 sector.
pub fn embed_initial_state(
    code: &StabilizerCode,
    bloch: [f64; 3],
) -> Result<DensityMatrix, DynamicsError> {
    if code.k() != 1 {
        return Err(DynamicsError::Unsupported(format!(
            "Bloch-vector embedding needs k = 1, code has k = {}",
            code.k()
        )));
    }
    let [x, y, z] = bloch;
    let norm = libm::sqrt(x * x + y * y + z * z);
    if norm > 1.0 + 1e-12 {
        return Err(DynamicsError::InvalidState(format!(
            "Bloch vector norm {norm} > 1"
        )));
    }
    let rho_l = CMatrix::from_rows(&[
        vec![C64::new((1.0 + z) / 2.0, 0.0), C64::new(x / 2.0, -y / 2.0)],
        vec![C64::new(x / 2.0, y / 2.0), C64::new((1.0 - z) / 2.0, 0.0)],
    ]);
    DensityMatrix::new(code.embed_code_space(&rho_l))
}

/// Drive Hamiltonian H0 = omega X_n / 2: an X rotation of the encoded qubit.
/// For the built-in code this commutes with the stabilizer, so it is
/// block-diagonal over syndromes with h_m = omega sigma_x / 2 in every block.
pub fn drive_hamiltonian(omega: f64, code: &StabilizerCode) -> Result<CMatrix, DynamicsError> {
    let dim = 1usize << code.n();
    if omega == 0.0 {
        return Ok(CMatrix::zeros(dim));
    }
    let xn = PauliOperator::x(code.n(), code.n())
        .map_err(CodeError::from)?
        .dense_matrix()
        .map_err(CodeError::from)?;
    Ok(xn.scaled(C64::new(omega / 2.0, 0.0)))
}

/// Build the master equation of a scenario: every recovery operator at rate
/// gamma, every code error at rate gamma', and the drive H0 = omega X_n / 2
/// on the encoded qubit. Rejected if the drive couples different syndrome
/// sectors.
pub fn build_spec(
    scenario: &Scenario,
    code: &StabilizerCode,
) -> Result<LindbladSpec, DynamicsError> {
    scenario.validate()?;
    let hamiltonian = drive_hamiltonian(scenario.omega, code)?;
    // the drive must be block-diagonal over syndromes
    syndrome_hamiltonians(&hamiltonian, code)?;

    let corrective = code
        .recovery_operators()?
        .into_iter()
        .map(|r| (r, scenario.gamma))
        .collect();
    let error_channels = code
        .errors()
        .iter()
        .map(|e| {
            Ok((
                e.dense_matrix().map_err(CodeError::from)?,
                scenario.gamma_prime,
            ))
        })
        .collect::<Result<Vec<_>, DynamicsError>>()?;

    let spec = LindbladSpec {
        hamiltonian,
        corrective,
        error_channels,
    };
    spec.validate()?;
    Ok(spec)
}

/// Split a syndrome-block-diagonal Hamiltonian into its logical blocks h_m.
/// Fails if any off-diagonal syndrome block is non-zero.
pub fn syndrome_hamiltonians(
    h: &CMatrix,
    code: &StabilizerCode,
) -> Result<Vec<CMatrix>, DynamicsError> {
    let dl = code.logical_dim();
    let conj = code
        .logical_basis()
        .dagger()
        .matmul(h)
        .matmul(code.logical_basis());
    let scale = h.frobenius_norm().max(1.0);
    let mut blocks = Vec::with_capacity(code.syndrome_count());
    for m in 0..code.syndrome_count() {
        for mp in 0..code.syndrome_count() {
            if m == mp {
                continue;
            }
            let nrm = conj.block(m * dl, mp * dl, dl).frobenius_norm();
            if nrm > tol::STRUCTURAL * scale {
                return Err(DynamicsError::SpecInvalid(format!(
                    "Hamiltonian couples syndromes {m} and {mp} (block norm {nrm:.3e})"
                )));
            }
        }
        blocks.push(conj.block(m * dl, m * dl, dl));
    }
    Ok(blocks)
}

/// Per-syndrome drive vectors: h_m = c I + omega_m . sigma / 2, returned as
/// the omega_m. Requires k = 1.
pub fn bloch_drive_vectors(
    h: &CMatrix,
    code: &StabilizerCode,
) -> Result<Vec<[f64; 3]>, DynamicsError> {
    if code.k() != 1 {
        return Err(DynamicsError::Unsupported(String::from(
            "drive vectors need k = 1",
        )));
    }
    let blocks = syndrome_hamiltonians(h, code)?;
    Ok(blocks
        .iter()
        .map(|b| {
            let x = (b[(0, 1)] + b[(1, 0)]).re;
            let y = ((b[(0, 1)] - b[(1, 0)]) * C64::new(0.0, 1.0)).re;
            let z = (b[(0, 0)] - b[(1, 1)]).re;
            [x, y, z]
        })
        .collect())
}

/// Precomputed generator: caches channel daggers and the anticommutator kernel
/// K = (1/2) sum rate J†J so the right-hand side is pure matrix products.
pub struct LindbladGenerator {
    hamiltonian: CMatrix,
    channels: Vec<(CMatrix, CMatrix, f64)>,
    damping: CMatrix,
}

impl LindbladGenerator {
    pub fn new(spec: &LindbladSpec) -> Result<Self, DynamicsError> {
        spec.validate()?;
        let dim = spec.hamiltonian.dim();
        let mut damping = CMatrix::zeros(dim);
        let mut channels = Vec::new();
        for (op, rate) in spec.corrective.iter().chain(&spec.error_channels) {
            let dag = op.dagger();
            damping.add_assign_scaled(&dag.matmul(op), 0.5 * rate);
            channels.push((op.clone(), dag, *rate));
        }
        Ok(Self {
            hamiltonian: spec.hamiltonian.clone(),
            channels,
            damping,
        })
    }

    /// d rho/dt for the cached generator.
    pub fn rhs(&self, rho: &CMatrix) -> CMatrix {
        // -i (H rho - rho H)
        let hr = self.hamiltonian.matmul(rho);
        let rh = rho.matmul(&self.hamiltonian);
        let mut out = (&hr - &rh).scaled(C64::new(0.0, -1.0));
        // jump terms
        for (op, dag, rate) in &self.channels {
            if *rate == 0.0 {
                continue;
            }
            let jump = op.matmul(rho).matmul(dag);
            out.add_assign_scaled(&jump, *rate);
        }
        // -(K rho + rho K)
        let kr = self.damping.matmul(rho);
        let rk = rho.matmul(&self.damping);
        out.add_assign_scaled(&kr, -1.0);
        out.add_assign_scaled(&rk, -1.0);
        out
    }
}

/// One evaluation of the master-equation right-hand side.
pub fn lindblad_rhs(rho: &CMatrix, spec: &LindbladSpec) -> Result<CMatrix, DynamicsError> {
    Ok(LindbladGenerator::new(spec)?.rhs(rho))
}

fn rk4_step(gen: &LindbladGenerator, rho: &CMatrix, dt: f64) -> CMatrix {
    let k1 = gen.rhs(rho);
    let mut tmp = rho.clone();
    tmp.add_assign_scaled(&k1, dt / 2.0);
    let k2 = gen.rhs(&tmp);
    let mut tmp = rho.clone();
    tmp.add_assign_scaled(&k2, dt / 2.0);
    let k3 = gen.rhs(&tmp);
    let mut tmp = rho.clone();
    tmp.add_assign_scaled(&k3, dt);
    let k4 = gen.rhs(&tmp);

    let mut out = rho.clone();
    out.add_assign_scaled(&k1, dt / 6.0);
    out.add_assign_scaled(&k2, dt / 3.0);
    out.add_assign_scaled(&k3, dt / 3.0);
    out.add_assign_scaled(&k4, dt / 6.0);
    out
}

/// How often invariants are re-checked and states handed to the observer.
#[derive(Debug, Clone)]
pub struct IntegrationOptions {
    /// Hand every k-th step (plus step 0 and the final step) to the observer.
    pub record_every: usize,
    /// Run the eigenvalue positivity monitor every k-th recorded step.
    pub positivity_every: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            record_every: 1,
            positivity_every: 50,
        }
    }
}

/// Fixed-step RK4 integration of the master equation, streaming states to an
/// observer instead of storing the full series. Returns the final state and
/// any step-size warnings.
pub fn integrate<F>(
    rho0: &DensityMatrix,
    spec: &LindbladSpec,
    t_max: f64,
    dt: f64,
    options: &IntegrationOptions,
    mut observe: F,
) -> Result<(DensityMatrix, Vec<String>), DynamicsError>
where
    F: FnMut(usize, f64, &CMatrix) -> Result<(), DynamicsError>,
{
    let mut warnings = Vec::new();
    // drive magnitude: twice the largest entry, i.e. omega for H = omega X/2
    let guard = dt * (spec.total_rate() + 2.0 * spec.hamiltonian.max_abs());
    if guard > tol::STEP_GUARD {
        warnings.push(format!(
            "step-size guard exceeded: dt * (rates + drive) = {guard:.3} > {}; \
             results may be inaccurate",
            tol::STEP_GUARD
        ));
    }
    let gen = LindbladGenerator::new(spec)?;
    let steps = libm::round(t_max / dt).max(1.0) as usize;
    let record_every = options.record_every.max(1);

    let mut rho = rho0.matrix().clone();
    let mut recorded = 0usize;
    for step in 0..=steps {
        let t = step as f64 * dt;
        if step.is_multiple_of(record_every) || step == steps {
            check_invariants(
                &rho,
                step,
                t,
                recorded.is_multiple_of(options.positivity_every.max(1)),
            )?;
            observe(step, t, &rho)?;
            recorded += 1;
        }
        if step < steps {
            rho = rk4_step(&gen, &rho, dt);
        }
    }
    check_invariants(&rho, steps, t_max, true)?;
    Ok((DensityMatrix { mat: rho }, warnings))
}

fn check_invariants(
    rho: &CMatrix,
    step: usize,
    time: f64,
    check_positivity: bool,
) -> Result<(), DynamicsError> {
    let herm = rho.hermiticity_residual();
    if herm > tol::HERMITICITY {
        return Err(DynamicsError::InvariantViolation {
            step,
            time,
            what: format!("hermiticity residual {herm:.3e}"),
        });
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > tol::TRACE_DRIFT {
        return Err(DynamicsError::InvariantViolation {
            step,
            time,
            what: format!("trace drifted to {}", tr.re),
        });
    }
    // entries of a PSD trace-one matrix are bounded by 1; a blown-up step
    // trips this long before the periodic eigenvalue monitor
    let peak = rho.max_abs();
    if peak > 1.0 + 1e-6 {
        return Err(DynamicsError::InvariantViolation {
            step,
            time,
            what: format!("entry magnitude {peak:.3e} exceeds 1"),
        });
    }
    if check_positivity {
        let min = min_eigenvalue(rho);
        if min < tol::POSITIVITY {
            return Err(DynamicsError::InvariantViolation {
                step,
                time,
                what: format!("minimum eigenvalue {min:.3e}"),
            });
        }
    }
    Ok(())
}

/// Syndrome-block decomposition of a dense state: probabilities, logical
/// Bloch vectors (k = 1 only), and the largest off-diagonal block norm.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub probs: Vec<f64>,
    pub bloch: Option<Vec<[f64; 3]>>,
    pub offdiag_max: f64,
}

/// rho_{mm'} = (<m| (x) I) C† rho C (|m'> (x) I), reduced to probabilities
/// p_m = tr rho_mm and Bloch vectors r_m = tr(sigma rho_mm).
pub fn syndrome_blocks(rho: &CMatrix, code: &StabilizerCode) -> BlockDecomposition {
    let dl = code.logical_dim();
    let conj = code
        .logical_basis()
        .dagger()
        .matmul(rho)
        .matmul(code.logical_basis());
    let count = code.syndrome_count();

    let mut probs = Vec::with_capacity(count);
    let mut offdiag_max = 0.0f64;
    for m in 0..count {
        let mut tr = C64::new(0.0, 0.0);
        for l in 0..dl {
            tr += conj[(m * dl + l, m * dl + l)];
        }
        probs.push(tr.re);
        for mp in 0..count {
            if mp != m {
                offdiag_max = offdiag_max.max(conj.block(m * dl, mp * dl, dl).frobenius_norm());
            }
        }
    }

    let bloch = (code.k() == 1).then(|| {
        (0..count)
            .map(|m| {
                let b00 = conj[(2 * m, 2 * m)];
                let b01 = conj[(2 * m, 2 * m + 1)];
                let b10 = conj[(2 * m + 1, 2 * m)];
                let b11 = conj[(2 * m + 1, 2 * m + 1)];
                let x = (b01 + b10).re;
                let y = ((b01 - b10) * C64::new(0.0, 1.0)).re;
                let z = (b00 - b11).re;
                [x, y, z]
            })
            .collect()
    });

    BlockDecomposition {
        probs,
        bloch,
        offdiag_max,
    }
}

/// Recovered-state fidelity: F = tr(rho_id sum_m R_m rho R_m†), i.e. one
/// final detection-recovery event before comparing with the ideal state.
/// The overlap must be real; the result is clamped to [0, 1] afterwards.
pub fn fidelity(
    rho: &CMatrix,
    rho_ideal: &CMatrix,
    recovery_ops: &[CMatrix],
) -> Result<f64, DynamicsError> {
    let recovered = apply_recovery(recovery_ops, rho);
    let overlap = rho_ideal.matmul(&recovered).trace();
    if overlap.im.abs() > 1e-10 {
        return Err(DynamicsError::NumericalConsistency(format!(
            "fidelity overlap has imaginary part {:.3e}",
            overlap.im
        )));
    }
    let f = overlap.re;
    if !(-1e-8..=1.0 + 1e-8).contains(&f) {
        return Err(DynamicsError::NumericalConsistency(format!(
            "fidelity {f} outside [0, 1]"
        )));
    }
    Ok(f.clamp(0.0, 1.0))
}

/// Everything the dense engine produces for one scenario.
#[derive(Debug, Clone)]
pub struct DenseRun {
    pub records: Vec<StepRecord>,
    /// Largest off-diagonal syndrome-block norm seen over the run.
    pub offdiag_max: f64,
    pub warnings: Vec<String>,
    pub final_state: DensityMatrix,
}

/// Run the dense engine for a scenario: integrate the master equation and
/// extract the block observables and recovered fidelity at every recorded
/// step. The ideal reference state evolves under the drive alone.
pub fn run_dense(
    scenario: &Scenario,
    code: &StabilizerCode,
    options: &IntegrationOptions,
) -> Result<DenseRun, DynamicsError> {
    if code.k() != 1 {
        return Err(DynamicsError::Unsupported(String::from(
            "the record schema needs k = 1",
        )));
    }
    let spec = build_spec(scenario, code)?;
    let rho0 = embed_initial_state(code, scenario.initial_bloch)?;
    let recovery_ops = code.recovery_operators()?;
    let u_dt = unitary_evolution(&spec.hamiltonian, scenario.dt);
    let u_dt_dag = u_dt.dagger();

    let mut rho_ideal = rho0.matrix().clone();
    let mut last_step = 0usize;
    let mut records = Vec::new();
    let mut offdiag_max = 0.0f64;

    let (final_state, warnings) = integrate(
        &rho0,
        &spec,
        scenario.t_max,
        scenario.dt,
        options,
        |step, t, rho| {
            // advance the ideal state to this step
            while last_step < step {
                rho_ideal = u_dt.matmul(&rho_ideal).matmul(&u_dt_dag);
                last_step += 1;
            }
            let blocks = syndrome_blocks(rho, code);
            offdiag_max = offdiag_max.max(blocks.offdiag_max);
            let f = fidelity(rho, &rho_ideal, &recovery_ops)?;
            records.push(StepRecord {
                t,
                probs: blocks.probs,
                bloch: blocks.bloch.expect("k = 1 checked above"),
                fidelity: f,
            });
            Ok(())
        },
    )?;

    Ok(DenseRun {
        records,
        offdiag_max,
        warnings,
        final_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::three_qubit_phase_code;

    fn scenario(gamma: f64, gamma_prime: f64, omega: f64, bloch: [f64; 3]) -> Scenario {
        Scenario {
            gamma,
            gamma_prime,
            omega,
            initial_bloch: bloch,
            t_max: 1.0,
            dt: 1e-3,
        }
    }

    #[test]
    fn embedded_state_has_unit_syndrome_zero_probability() {
        let code = three_qubit_phase_code();
        for bloch in [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]] {
            let rho = embed_initial_state(&code, bloch).unwrap();
            let blocks = syndrome_blocks(rho.matrix(), &code);
            assert!((blocks.probs[0] - 1.0).abs() < 1e-14);
            let r0 = blocks.bloch.as_ref().unwrap()[0];
            for i in 0..3 {
                assert!((r0[i] - bloch[i]).abs() < 1e-14);
            }
            assert!(blocks.offdiag_max < 1e-15);
        }
        // |0_L> is the pure encoded projector
        let rho = embed_initial_state(&code, [0.0, 0.0, 1.0]).unwrap();
        let sq = rho.matrix().matmul(rho.matrix());
        assert!((sq.trace().re - 1.0).abs() < 1e-14);
        // norm > 1 rejected
        assert!(embed_initial_state(&code, [1.0, 0.1, 0.0]).is_err());
    }

    #[test]
    fn spec_has_the_right_channel_counts() {
        let code = three_qubit_phase_code();
        let spec = build_spec(&scenario(1.0, 1.0, 0.0, [0.0, 1.0, 0.0]), &code).unwrap();
        assert_eq!(spec.corrective.len(), 4);
        assert_eq!(spec.error_channels.len(), 3);
    }

    #[test]
    fn drive_spectrum_is_half_omega() {
        // H0 = X3/2 at omega = 1 has eigenvalues +-1/2, each 4-fold
        let code = three_qubit_phase_code();
        let spec = build_spec(&scenario(1.0, 1.0, 1.0, [0.0, 0.0, 1.0]), &code).unwrap();
        let (vals, _) = crate::matrix::hermitian_eigen(&spec.hamiltonian);
        for (i, v) in vals.iter().enumerate() {
            let expected = if i < 4 { -0.5 } else { 0.5 };
            assert!((v - expected).abs() < 1e-12);
        }
        // and the drive is block-diagonal with omega_m = (1, 0, 0)
        let omegas = bloch_drive_vectors(&spec.hamiltonian, &code).unwrap();
        for w in omegas {
            assert!((w[0] - 1.0).abs() < 1e-13 && w[1].abs() < 1e-13 && w[2].abs() < 1e-13);
        }
    }

    #[test]
    fn syndrome_coupling_hamiltonian_is_rejected() {
        // physical Z1 conjugates to X1, which flips the first syndrome bit
        let code = three_qubit_phase_code();
        let z1 = PauliOperator::z(3, 1).unwrap().dense_matrix().unwrap();
        assert!(matches!(
            syndrome_hamiltonians(&z1, &code),
            Err(DynamicsError::SpecInvalid(_))
        ));
        // while physical X1 conjugates to Z1: block-diagonal, allowed
        let x1 = PauliOperator::x(3, 1).unwrap().dense_matrix().unwrap();
        assert!(syndrome_hamiltonians(&x1, &code).is_ok());
    }

    #[test]
    fn rhs_is_traceless_and_matches_the_compact_form() {
        let code = three_qubit_phase_code();
        let spec = build_spec(&scenario(1.3, 0.7, 0.9, [0.2, 0.5, 0.1]), &code).unwrap();
        let rho = embed_initial_state(&code, [0.2, 0.5, 0.1]).unwrap();
        let rhs = lindblad_rhs(rho.matrix(), &spec).unwrap();
        assert!(rhs.trace().norm() < 1e-12);

        // compact form: -i[H,rho] - (g + N g') rho + g sum R rho R' + g' sum E rho E'
        let (g, gp, n) = (1.3, 0.7, 3.0);
        let h = &spec.hamiltonian;
        let comm = &h.matmul(rho.matrix()) - &rho.matrix().matmul(h);
        let mut compact = comm.scaled(C64::new(0.0, -1.0));
        compact.add_assign_scaled(rho.matrix(), -(g + n * gp));
        for (r, _) in &spec.corrective {
            compact.add_assign_scaled(&r.matmul(rho.matrix()).matmul(&r.dagger()), g);
        }
        for (e, _) in &spec.error_channels {
            compact.add_assign_scaled(&e.matmul(rho.matrix()).matmul(&e.dagger()), gp);
        }
        assert!((&rhs - &compact).frobenius_norm() < 1e-13);
    }

    #[test]
    fn rhs_on_maximally_mixed_state_is_pure_corrective() {
        // errors are unitary so they leave I/8 alone; only the corrective
        // channels act
        let code = three_qubit_phase_code();
        let spec = build_spec(&scenario(2.0, 1.0, 0.0, [0.0, 0.0, 0.0]), &code).unwrap();
        let mixed = CMatrix::identity(8).scaled(C64::new(1.0 / 8.0, 0.0));
        let rhs = lindblad_rhs(&mixed, &spec).unwrap();
        let mut expected = mixed.scaled(C64::new(-2.0, 0.0));
        for (r, _) in &spec.corrective {
            expected.add_assign_scaled(&r.matmul(&mixed).matmul(&r.dagger()), 2.0);
        }
        assert!((&rhs - &expected).frobenius_norm() < 1e-14);
    }

    #[test]
    fn code_space_state_without_errors_only_feels_the_drive() {
        // gamma' = 0 and a syndrome-0 state: corrective jumps act trivially
        let code = three_qubit_phase_code();
        let spec = build_spec(&scenario(2.0, 0.0, 1.0, [0.0, 1.0, 0.0]), &code).unwrap();
        let rho = embed_initial_state(&code, [0.0, 1.0, 0.0]).unwrap();
        let rhs = lindblad_rhs(rho.matrix(), &spec).unwrap();
        let h = &spec.hamiltonian;
        let comm = (&h.matmul(rho.matrix()) - &rho.matrix().matmul(h)).scaled(C64::new(0.0, -1.0));
        assert!((&rhs - &comm).frobenius_norm() < 1e-12);
    }

    #[test]
    fn zero_generator_keeps_the_state_constant() {
        let code = three_qubit_phase_code();
        let s = Scenario {
            gamma: 0.0,
            gamma_prime: 0.0,
            omega: 0.0,
            initial_bloch: [0.3, 0.4, 0.5],
            t_max: 0.5,
            dt: 1e-2,
        };
        let run = run_dense(&s, &code, &IntegrationOptions::default()).unwrap();
        let first = &run.records[0];
        let last = run.records.last().unwrap();
        assert_eq!(first.probs.len(), 4);
        for m in 0..4 {
            assert!((first.probs[m] - last.probs[m]).abs() < 1e-14);
            for i in 0..3 {
                assert!((first.bloch[m][i] - last.bloch[m][i]).abs() < 1e-14);
            }
        }
        // mixed state: F = (1 + |r|^2)/2 at all times with nothing running
        let r2: f64 = s.initial_bloch.iter().map(|v| v * v).sum();
        assert!((last.fidelity - 0.5 * (1.0 + r2)).abs() < 1e-12);
    }

    #[test]
    fn drive_alone_implements_an_encoded_bit_flip() {
        // X_n commutes with the stabilizer and anticommutes with the logical
        // pointer, so a pi rotation under H0 = omega X_n / 2 flips the
        // encoded qubit: z0 = 1 ends at z = -1 with no decoherence channels
        let code = three_qubit_phase_code();
        let s = Scenario {
            gamma: 0.0,
            gamma_prime: 0.0,
            omega: 1.0,
            initial_bloch: [0.0, 0.0, 1.0],
            t_max: core::f64::consts::PI,
            dt: 1e-3,
        };
        let run = run_dense(
            &s,
            &code,
            &IntegrationOptions {
                record_every: 100,
                positivity_every: 10,
            },
        )
        .unwrap();
        let last = run.records.last().unwrap();
        assert!(
            (last.probs[0] - 1.0).abs() < 1e-10,
            "no channels, no syndrome leakage"
        );
        // the end time is pi rounded to the step grid, hence the loose bound
        assert!(
            (last.bloch[0][2] + 1.0).abs() < 1e-6,
            "z = {}",
            last.bloch[0][2]
        );
        assert!(last.bloch[0][0].abs() < 1e-6);
    }

    #[test]
    fn error_conjugation_lands_in_the_right_block() {
        // E3 applied to an encoded (0,1,0) state: p3 = 1, r3 = (0,-1,0)
        let code = three_qubit_phase_code();
        let rho = embed_initial_state(&code, [0.0, 1.0, 0.0]).unwrap();
        let e3 = code.errors()[2].dense_matrix().unwrap();
        let moved = e3.matmul(rho.matrix()).matmul(&e3.dagger());
        let blocks = syndrome_blocks(&moved, &code);
        assert!((blocks.probs[3] - 1.0).abs() < 1e-14);
        let r3 = blocks.bloch.unwrap()[3];
        assert!(r3[0].abs() < 1e-14 && (r3[1] + 1.0).abs() < 1e-14 && r3[2].abs() < 1e-14);
    }

    #[test]
    fn probabilities_sum_to_one_along_a_run() {
        let code = three_qubit_phase_code();
        let run = run_dense(
            &scenario(1.0, 1.0, 0.0, [0.0, 1.0, 0.0]),
            &code,
            &IntegrationOptions {
                record_every: 100,
                positivity_every: 5,
            },
        )
        .unwrap();
        for rec in &run.records {
            let sum: f64 = rec.probs.iter().sum();
            assert!((sum - 1.0).abs() < tol::PROBABILITY_SUM);
            assert!(rec.fidelity >= 0.0 && rec.fidelity <= 1.0);
        }
        assert!(run.offdiag_max < 1e-12);
        assert!(run.warnings.is_empty());
    }

    #[test]
    fn fidelity_is_one_at_t_zero_for_pure_states() {
        let code = three_qubit_phase_code();
        let rho = embed_initial_state(&code, [0.6, 0.0, 0.8]).unwrap();
        let ops = code.recovery_operators().unwrap();
        let f = fidelity(rho.matrix(), rho.matrix(), &ops).unwrap();
        assert!((f - 1.0).abs() < 1e-14);
    }

    #[test]
    fn oversized_step_produces_a_warning_and_blowup_is_caught() {
        let code = three_qubit_phase_code();
        let s = Scenario {
            gamma: 40.0,
            gamma_prime: 40.0,
            omega: 0.0,
            initial_bloch: [0.0, 1.0, 0.0],
            t_max: 10.0,
            dt: 0.1,
        };
        // dt * total rate = 16: far past the guard; RK4 is unstable here and
        // the invariant monitor must fail loudly rather than return garbage
        match run_dense(&s, &code, &IntegrationOptions::default()) {
            Err(DynamicsError::InvariantViolation { step, .. }) => assert!(step > 0),
            Ok(run) => panic!(
                "expected an invariant violation, got a run with final trace {}",
                run.final_state.matrix().trace().re
            ),
            Err(other) => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn convergence_is_fourth_order() {
        // halving dt cuts the error against a fine-step reference by ~16x
        let code = three_qubit_phase_code();
        let mut errs = Vec::new();
        let reference = run_dense(
            &Scenario {
                gamma: 1.0,
                gamma_prime: 1.0,
                omega: 1.0,
                initial_bloch: [0.0, 1.0, 0.0],
                t_max: 1.0,
                dt: 0.0025,
            },
            &code,
            &IntegrationOptions {
                record_every: 400,
                positivity_every: 1,
            },
        )
        .unwrap();
        let ref_final = reference.records.last().unwrap().clone();
        for dt in [0.04, 0.02] {
            let run = run_dense(
                &Scenario {
                    gamma: 1.0,
                    gamma_prime: 1.0,
                    omega: 1.0,
                    initial_bloch: [0.0, 1.0, 0.0],
                    t_max: 1.0,
                    dt,
                },
                &code,
                &IntegrationOptions {
                    record_every: 1000,
                    positivity_every: 1,
                },
            )
            .unwrap();
            let last = run.records.last().unwrap();
            let err: f64 = last
                .values()
                .iter()
                .zip(ref_final.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (10.0..26.0).contains(&ratio),
            "expected ~16x error reduction, got {ratio} (errors {errs:?})"
        );
    }
}
