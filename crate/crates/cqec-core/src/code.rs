//! Stabilizer codes: syndromes, error actions, the logical basis, and
//! recovery operators.
//!
//! A code on `n` carriers protecting `k` qubits is described by `n - k`
//! commuting generators M_j, `k` logical pointers L_j', a list of
//! `N = 2^(n-k) - 1` correctable Pauli errors E_a, and the unitary logical
//! basis C whose columns are the states |m, l>. C maps the physical product
//! basis onto the logical one, so C† M_j C = Z_j and C† L_j' C = Z_{n-k+j'}.
//!
//! Syndrome-bit convention: bit j of a commutation pattern is 1 iff the
//! operator anticommutes with M_j, with bit 1 leftmost; the syndrome index
//! is the binary value of that string. For the built-in three-qubit phase
//! code this gives c(Z1) = 10, c(Z2) = 01, c(Z3) = 11.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use thiserror::Error;

use crate::matrix::{CMatrix, C64};
use crate::pauli::{PauliError, PauliOperator};
use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("invalid code structure: {0}")]
    Structure(String),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("operator is not a valid stabilizer-code error: {0}")]
    InvalidErrorAction(String),
    #[error("syndrome index {m} out of range (code has {count} syndromes)")]
    SyndromeRange { m: usize, count: usize },
    #[error("no code error carries syndrome {m}")]
    NoErrorForSyndrome { m: usize },
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
}

/// How a Pauli error acts on the logical basis:
/// `E |m,l> = e^{i phases[m]} |m XOR syndrome> (x) logical_unitary |l>`.
#[derive(Debug, Clone)]
pub struct ErrorAction {
    /// Commutation pattern with the generators, bit 1 leftmost.
    pub pattern: Vec<u8>,
    /// Binary value of the pattern; the syndrome shift the error produces.
    pub syndrome: usize,
    /// Unitary rotation of the logical space (2^k x 2^k); a Pauli matrix up
    /// to phase for stabilizer codes.
    pub logical_unitary: CMatrix,
    /// Syndrome-dependent phases, one per starting syndrome m.
    pub phases: Vec<f64>,
}

/// An [[n, k]] stabilizer code with its error list and logical basis.
#[derive(Debug, Clone)]
pub struct StabilizerCode {
    n: usize,
    k: usize,
    generators: Vec<PauliOperator>,
    logical_pointers: Vec<PauliOperator>,
    errors: Vec<PauliOperator>,
    logical_basis: CMatrix,
    logical_basis_dagger: CMatrix,
}

impl StabilizerCode {
    /// Assemble a code from parts. Only structural consistency (counts and
    /// dimensions) is enforced here; semantic validity is the business of
    /// [`StabilizerCode::verify`], so that invalid codes can still be built
    /// and reported on.
    pub fn new(
        n: usize,
        k: usize,
        generators: Vec<PauliOperator>,
        logical_pointers: Vec<PauliOperator>,
        errors: Vec<PauliOperator>,
        logical_basis: CMatrix,
    ) -> Result<Self, CodeError> {
        if k == 0 || k >= n {
            return Err(CodeError::Structure(format!(
                "need 0 < k < n, got n={n}, k={k}"
            )));
        }
        if generators.len() != n - k {
            return Err(CodeError::Structure(format!(
                "expected {} generators, got {}",
                n - k,
                generators.len()
            )));
        }
        if logical_pointers.len() != k {
            return Err(CodeError::Structure(format!(
                "expected {} logical pointers, got {}",
                k,
                logical_pointers.len()
            )));
        }
        let n_errors = (1usize << (n - k)) - 1;
        if errors.len() != n_errors {
            return Err(CodeError::Structure(format!(
                "expected {} errors, got {}",
                n_errors,
                errors.len()
            )));
        }
        for p in generators.iter().chain(&logical_pointers).chain(&errors) {
            if p.n() != n {
                return Err(CodeError::Structure(format!(
                    "operator {} acts on {} qubits, code has {}",
                    p,
                    p.n(),
                    n
                )));
            }
        }
        if logical_basis.dim() != 1 << n {
            return Err(CodeError::Structure(format!(
                "logical basis is {}x{}, expected {}",
                logical_basis.dim(),
                logical_basis.dim(),
                1 << n
            )));
        }
        let logical_basis_dagger = logical_basis.dagger();
        Ok(Self {
            n,
            k,
            generators,
            logical_pointers,
            errors,
            logical_basis,
            logical_basis_dagger,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of correctable errors / non-trivial syndromes, N = 2^(n-k) - 1.
    pub fn error_count(&self) -> usize {
        (1 << (self.n - self.k)) - 1
    }

    pub fn syndrome_count(&self) -> usize {
        1 << (self.n - self.k)
    }

    pub fn logical_dim(&self) -> usize {
        1 << self.k
    }

    pub fn generators(&self) -> &[PauliOperator] {
        &self.generators
    }

    pub fn logical_pointers(&self) -> &[PauliOperator] {
        &self.logical_pointers
    }

    pub fn errors(&self) -> &[PauliOperator] {
        &self.errors
    }

    /// The encoding unitary C; column (m * 2^k + l) is the state |m, l>.
    pub fn logical_basis(&self) -> &CMatrix {
        &self.logical_basis
    }

    /// Commutation pattern of `e` with the generators: bit j is 1 iff `e`
    /// anticommutes with M_j, bit 1 leftmost.
    pub fn syndrome_bits(&self, e: &PauliOperator) -> Result<Vec<u8>, CodeError> {
        self.generators
            .iter()
            .map(|m| Ok(if e.commutes(m)? { 0 } else { 1 }))
            .collect()
    }

    /// Syndrome index: binary value of the pattern, bit 1 most significant.
    pub fn syndrome_index(&self, e: &PauliOperator) -> Result<usize, CodeError> {
        let bits = self.syndrome_bits(e)?;
        Ok(bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize))
    }

    /// Conjugate `e` into the logical basis and read off its block structure
    /// per `E |m,l> = e^{i phi_m} |m + c> (x) U |l>`. The convention
    /// phi_0 = 0 fixes the overall phase of U.
    pub fn error_action(&self, e: &PauliOperator) -> Result<ErrorAction, CodeError> {
        let pattern = self.syndrome_bits(e)?;
        let syndrome = pattern
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | b as usize);
        let dl = self.logical_dim();
        let dense = e.dense_matrix()?;
        let conj = self
            .logical_basis_dagger
            .matmul(&dense)
            .matmul(&self.logical_basis);

        // Everything outside the blocks (m + c, m) must vanish.
        let mut stray = conj.clone();
        let mut blocks = Vec::with_capacity(self.syndrome_count());
        for m in 0..self.syndrome_count() {
            blocks.push(conj.block((m ^ syndrome) * dl, m * dl, dl));
            stray.set_block((m ^ syndrome) * dl, m * dl, &CMatrix::zeros(dl));
        }
        let stray_norm = stray.frobenius_norm();
        if stray_norm > tol::STRUCTURAL {
            return Err(CodeError::InvalidErrorAction(format!(
                "{} does not map logical basis states to logical basis states \
                 (off-pattern block norm {:.3e})",
                e, stray_norm
            )));
        }

        let logical_unitary = blocks[0].clone();
        let ur = logical_unitary.unitarity_residual();
        if ur > tol::STRUCTURAL {
            return Err(CodeError::InvalidErrorAction(format!(
                "logical block of {} is not unitary (residual {:.3e})",
                e, ur
            )));
        }
        let udag = logical_unitary.dagger();
        let mut phases = Vec::with_capacity(blocks.len());
        for (m, b) in blocks.iter().enumerate() {
            let z = udag.matmul(b).trace() / dl as f64;
            if (z.norm() - 1.0).abs() > tol::STRUCTURAL {
                return Err(CodeError::InvalidErrorAction(format!(
                    "syndrome-{m} block of {} is not a phase times the m=0 block",
                    e
                )));
            }
            let phi = libm::atan2(z.im, z.re);
            let rebuilt = logical_unitary.scaled(C64::new(libm::cos(phi), libm::sin(phi)));
            if (&rebuilt - b).frobenius_norm() > tol::STRUCTURAL {
                return Err(CodeError::InvalidErrorAction(format!(
                    "syndrome-{m} block of {} deviates from e^(i phi) U",
                    e
                )));
            }
            phases.push(phi);
        }

        Ok(ErrorAction {
            pattern,
            syndrome,
            logical_unitary,
            phases,
        })
    }

    /// Logical recovery unitary U_m for a syndrome; U_0 = I by convention.
    pub fn recovery_unitary(&self, m: usize) -> Result<CMatrix, CodeError> {
        if m >= self.syndrome_count() {
            return Err(CodeError::SyndromeRange {
                m,
                count: self.syndrome_count(),
            });
        }
        if m == 0 {
            return Ok(CMatrix::identity(self.logical_dim()));
        }
        for e in &self.errors {
            if self.syndrome_index(e)? == m {
                return Ok(self.error_action(e)?.logical_unitary);
            }
        }
        Err(CodeError::NoErrorForSyndrome { m })
    }

    /// Recovery operator R_m = C (|0><m| (x) U_m†) C† in the physical basis.
    pub fn recovery_operator(&self, m: usize) -> Result<CMatrix, CodeError> {
        let u = self.recovery_unitary(m)?;
        let dl = self.logical_dim();
        let mut inner = CMatrix::zeros(1 << self.n);
        inner.set_block(0, m * dl, &u.dagger());
        Ok(self
            .logical_basis
            .matmul(&inner)
            .matmul(&self.logical_basis_dagger))
    }

    /// All recovery operators R_0 .. R_N; they satisfy sum R†R = I.
    pub fn recovery_operators(&self) -> Result<Vec<CMatrix>, CodeError> {
        (0..self.syndrome_count())
            .map(|m| self.recovery_operator(m))
            .collect()
    }

    /// One full detection-recovery event, rho -> sum_m R_m rho R_m†.
    /// The input must be a density matrix (Hermitian, unit trace, PSD within
    /// tolerance); the output is supported on the syndrome-0 sector.
    pub fn recovery_map(&self, rho: &CMatrix) -> Result<CMatrix, CodeError> {
        validate_density_input(rho)?;
        let ops = self.recovery_operators()?;
        Ok(apply_recovery(&ops, rho))
    }

    /// Encode a 2^k-dimensional logical state: C (|0> (x) chi).
    pub fn encode_vector(&self, chi: &crate::matrix::CVector) -> crate::matrix::CVector {
        let dim = 1 << self.n;
        let mut full = crate::matrix::CVector::zeros(dim);
        full.data[..chi.len()].copy_from_slice(&chi.data);
        self.logical_basis.matvec(&full)
    }

    /// Embed a logical density matrix into the syndrome-0 sector:
    /// C (|0><0| (x) rho_l) C†.
    pub fn embed_code_space(&self, rho_logical: &CMatrix) -> CMatrix {
        let mut inner = CMatrix::zeros(1 << self.n);
        inner.set_block(0, 0, rho_logical);
        self.logical_basis
            .matmul(&inner)
            .matmul(&self.logical_basis_dagger)
    }

    /// Run every code invariant and collect a pass/fail report.
    pub fn verify(&self) -> ValidationReport {
        let mut report = ValidationReport { checks: Vec::new() };
        let nmk = self.n - self.k;

        let mut herm = true;
        let mut detail = String::new();
        for g in &self.generators {
            if !g.is_hermitian() {
                herm = false;
                detail = format!("{} is not Hermitian", g);
            }
        }
        report.push("generators hermitian", herm, None, detail);

        let mut commute = true;
        let mut detail = String::new();
        for i in 0..self.generators.len() {
            for j in (i + 1)..self.generators.len() {
                if !self.generators[i]
                    .commutes(&self.generators[j])
                    .unwrap_or(false)
                {
                    commute = false;
                    detail = format!(
                        "{} and {} anticommute",
                        self.generators[i], self.generators[j]
                    );
                }
            }
        }
        report.push("generators commute", commute, None, detail);

        let rank = gf2_rank(&self.generators);
        report.push(
            "generators independent",
            rank == nmk,
            None,
            if rank == nmk {
                String::new()
            } else {
                format!("symplectic rank {rank} < {nmk}")
            },
        );

        let herm = self.logical_pointers.iter().all(|l| l.is_hermitian());
        report.push("logical pointers hermitian", herm, None, String::new());

        let mut ok = true;
        let mut detail = String::new();
        for l in &self.logical_pointers {
            for g in &self.generators {
                if !l.commutes(g).unwrap_or(false) {
                    ok = false;
                    detail = format!("{} anticommutes with generator {}", l, g);
                }
            }
        }
        report.push("logical pointers commute with stabilizer", ok, None, detail);

        let mut ok = true;
        for i in 0..self.logical_pointers.len() {
            for j in (i + 1)..self.logical_pointers.len() {
                if !self.logical_pointers[i]
                    .commutes(&self.logical_pointers[j])
                    .unwrap_or(false)
                {
                    ok = false;
                }
            }
        }
        report.push("logical pointers mutually commute", ok, None, String::new());

        let ur = self.logical_basis.unitarity_residual();
        report.push(
            "logical basis unitary",
            ur <= tol::STRUCTURAL,
            Some(ur),
            String::new(),
        );

        // C† M_j C must equal Z_j exactly, and C† L_j' C must equal Z_{n-k+j'}.
        let mut worst = 0.0f64;
        let mut ok = true;
        for (j, op) in self
            .generators
            .iter()
            .chain(&self.logical_pointers)
            .enumerate()
        {
            let expected = match PauliOperator::z(self.n, j + 1).and_then(|z| z.dense_matrix()) {
                Ok(m) => m,
                Err(_) => {
                    ok = false;
                    break;
                }
            };
            match op.dense_matrix() {
                Ok(d) => {
                    let conj = self
                        .logical_basis_dagger
                        .matmul(&d)
                        .matmul(&self.logical_basis);
                    worst = worst.max((&conj - &expected).frobenius_norm());
                }
                Err(_) => ok = false,
            }
        }
        report.push(
            "logical basis diagonalizes the CSCO",
            ok && worst <= tol::STRUCTURAL,
            Some(worst),
            String::new(),
        );

        let herm = self.errors.iter().all(|e| e.is_hermitian());
        report.push("errors hermitian", herm, None, String::new());

        // Non-degeneracy: error -> syndrome is injective onto 1..N.
        let mut seen = vec![false; self.syndrome_count()];
        let mut ok = true;
        let mut detail = String::new();
        for e in &self.errors {
            match self.syndrome_index(e) {
                Ok(0) => {
                    ok = false;
                    detail = format!("error {} has trivial syndrome", e);
                }
                Ok(s) if seen[s] => {
                    ok = false;
                    detail = format!("two errors share syndrome {s:0width$b}", width = nmk);
                }
                Ok(s) => seen[s] = true,
                Err(_) => ok = false,
            }
        }
        if ok && !seen[1..].iter().all(|&s| s) {
            ok = false;
            detail = String::from("error patterns do not cover all nonzero syndromes");
        }
        report.push("non-degenerate error patterns", ok, None, detail);

        let mut ok = true;
        let mut detail = String::new();
        for e in &self.errors {
            if let Err(err) = self.error_action(e) {
                ok = false;
                detail = format!("{err}");
            }
        }
        report.push("error actions valid", ok, None, detail);

        match self.recovery_operators() {
            Ok(ops) => {
                let mut sum = CMatrix::zeros(1 << self.n);
                for r in &ops {
                    let rr = r.dagger().matmul(r);
                    sum = &sum + &rr;
                }
                let residual = (&sum - &CMatrix::identity(1 << self.n)).frobenius_norm();
                report.push(
                    "recovery completeness",
                    residual <= tol::STRUCTURAL,
                    Some(residual),
                    String::new(),
                );
            }
            Err(err) => {
                report.push("recovery completeness", false, None, format!("{err}"));
            }
        }

        report
    }
}

/// sum_m R_m rho R_m† with a prebuilt operator family.
pub fn apply_recovery(ops: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(rho.dim());
    for r in ops {
        let term = r.matmul(rho).matmul(&r.dagger());
        out = &out + &term;
    }
    out
}

fn validate_density_input(rho: &CMatrix) -> Result<(), CodeError> {
    let herm = rho.hermiticity_residual();
    if herm > tol::HERMITICITY {
        return Err(CodeError::InvalidDensity(format!(
            "hermiticity residual {herm:.3e}"
        )));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > tol::TRACE_DRIFT || tr.im.abs() > tol::HERMITICITY {
        return Err(CodeError::InvalidDensity(format!("trace {tr}")));
    }
    let min = crate::matrix::min_eigenvalue(rho);
    if min < tol::POSITIVITY {
        return Err(CodeError::InvalidDensity(format!(
            "minimum eigenvalue {min:.3e}"
        )));
    }
    Ok(())
}

/// GF(2) rank of the symplectic (x|z) rows.
fn gf2_rank(ops: &[PauliOperator]) -> usize {
    let mut rows: Vec<u128> = ops
        .iter()
        .map(|p| p.x_bits() as u128 | (p.z_bits() as u128) << 64)
        .collect();
    let mut rank = 0;
    for bit in (0..128).rev() {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] >> bit & 1 == 1) else {
            continue;
        };
        rows.swap(rank, pivot);
        for r in 0..rows.len() {
            if r != rank && rows[r] >> bit & 1 == 1 {
                rows[r] ^= rows[rank];
            }
        }
        rank += 1;
    }
    rank
}

/// Result of [`StabilizerCode::verify`]: one entry per invariant.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<CodeCheck>,
}

#[derive(Debug, Clone)]
pub struct CodeCheck {
    pub name: &'static str,
    pub passed: bool,
    pub residual: Option<f64>,
    pub detail: String,
}

impl ValidationReport {
    fn push(&mut self, name: &'static str, passed: bool, residual: Option<f64>, detail: String) {
        self.checks.push(CodeCheck {
            name,
            passed,
            residual,
            detail,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            write!(f, "{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name)?;
            if let Some(r) = c.residual {
                write!(f, " (residual {r:.3e})")?;
            }
            if !c.detail.is_empty() {
                write!(f, ": {}", c.detail)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// One layer of Hadamard gates on the listed 1-based qubits, evaluated as a
/// single matrix. For an even qubit count the entries are exact dyadic
/// rationals, which keeps every matrix derived from the built-in encoding
/// circuit exactly representable.
fn hadamard_layer(n: usize, qubits: &[usize]) -> CMatrix {
    let dim = 1usize << n;
    let mut mask = 0usize;
    for &q in qubits {
        mask |= 1 << (n - q);
    }
    let scale = {
        let pairs = qubits.len() / 2;
        let base = 1.0 / (1u64 << pairs) as f64;
        if qubits.len() % 2 == 1 {
            base / libm::sqrt(2.0)
        } else {
            base
        }
    };
    CMatrix::from_fn(dim, |r, c| {
        if (r & !mask) != (c & !mask) {
            return C64::new(0.0, 0.0);
        }
        let sign_bits = (r & c & mask).count_ones();
        C64::new(if sign_bits % 2 == 1 { -scale } else { scale }, 0.0)
    })
}

/// CNOT with the given 1-based control and target qubits.
fn cnot_gate(n: usize, control: usize, target: usize) -> CMatrix {
    let dim = 1usize << n;
    let cshift = n - control;
    let tshift = n - target;
    CMatrix::from_fn(dim, |r, c| {
        let flipped = if c >> cshift & 1 == 1 {
            c ^ (1 << tshift)
        } else {
            c
        };
        C64::new(if r == flipped { 1.0 } else { 0.0 }, 0.0)
    })
}

/// The built-in three-qubit code protecting one qubit against phase errors:
/// generators M1 = X1X3, M2 = X2X3, logical pointer L = Z1Z2Z3, errors
/// E_a = Z_a. The logical basis comes from the fixed encoding circuit
/// (Hadamards on qubits 1 and 2, then CNOTs 2->3 and 1->3), which realizes
/// C† Z1 C = X1, C† Z2 C = X2, C† Z3 C = X1X2Z3 and C X3 C† = X3.
pub fn three_qubit_phase_code() -> StabilizerCode {
    let n = 3;
    let p = |s: &str| PauliOperator::parse(s, n).expect("built-in operator");
    let generators = vec![p("XIX"), p("IXX")];
    let logical_pointers = vec![p("ZZZ")];
    let errors = vec![p("ZII"), p("IZI"), p("IIZ")];

    let hadamards = hadamard_layer(n, &[1, 2]);
    let cnot23 = cnot_gate(n, 2, 3);
    let cnot13 = cnot_gate(n, 1, 3);
    let logical_basis = cnot13.matmul(&cnot23).matmul(&hadamards);

    StabilizerCode::new(n, 1, generators, logical_pointers, errors, logical_basis)
        .expect("built-in code is structurally valid")
}
