//! Exact algebra of n-qubit Pauli operators in the symplectic bit
//! representation.
//!
//! An operator is stored as `i^q * prod_j X_j^{x_j} Z_j^{z_j}` with the
//! quarter-phase exponent `q` tracked as an integer mod 4, so products and
//! commutation checks are exact bit arithmetic — no floating point enters
//! this module except when a dense matrix is requested.
//!
//! Conventions:
//! - qubit indices are 1-based in all user-facing text, and qubit 1 is the
//!   leftmost tensor factor (most significant bit of a basis index);
//! - the bit words `x_bits`/`z_bits` are little-endian on the qubit index
//!   (bit j-1 holds qubit j);
//! - basis label 0 is the +1 eigenstate of Z, label 1 the -1 eigenstate.

use alloc::format;
use alloc::string::String;
use core::fmt;
use thiserror::Error;

use crate::matrix::{CMatrix, C64};

/// Largest qubit count for which a dense realization may be requested.
pub const DENSE_QUBIT_CAP: usize = 12;

/// Largest qubit count the bit representation holds.
pub const MAX_QUBITS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("operators act on different qubit counts ({left} vs {right})")]
    SizeMismatch { left: usize, right: usize },
    #[error("qubit count {n} outside the supported range 1..={max}", max = MAX_QUBITS)]
    QubitCount { n: usize },
    #[error("qubit index {index} out of range for {n} qubits (indices are 1-based)")]
    QubitIndex { index: usize, n: usize },
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("dense realization of {n} qubits exceeds the cap of {cap}")]
    DenseCap { n: usize, cap: usize },
}

/// n-qubit Pauli operator with quarter-phase: `i^phase * prod_j X^{x_j} Z^{z_j}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x_bits: u64,
    z_bits: u64,
    phase: u8,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Result<Self, PauliError> {
        if n == 0 || n > MAX_QUBITS {
            return Err(PauliError::QubitCount { n });
        }
        Ok(Self {
            n,
            x_bits: 0,
            z_bits: 0,
            phase: 0,
        })
    }

    pub fn from_parts(n: usize, x_bits: u64, z_bits: u64, phase: u8) -> Result<Self, PauliError> {
        let mut p = Self::identity(n)?;
        let mask = mask(n);
        if x_bits & !mask != 0 || z_bits & !mask != 0 {
            return Err(PauliError::QubitCount { n });
        }
        p.x_bits = x_bits;
        p.z_bits = z_bits;
        p.phase = phase & 3;
        Ok(p)
    }

    /// X on the given 1-based qubit.
    pub fn x(n: usize, qubit: usize) -> Result<Self, PauliError> {
        Self::single(n, qubit, 1, 0, 0)
    }

    /// Y on the given 1-based qubit (stored as i * XZ).
    pub fn y(n: usize, qubit: usize) -> Result<Self, PauliError> {
        Self::single(n, qubit, 1, 1, 1)
    }

    /// Z on the given 1-based qubit.
    pub fn z(n: usize, qubit: usize) -> Result<Self, PauliError> {
        Self::single(n, qubit, 0, 1, 0)
    }

    fn single(n: usize, qubit: usize, x: u64, z: u64, phase: u8) -> Result<Self, PauliError> {
        let mut p = Self::identity(n)?;
        if qubit == 0 || qubit > n {
            return Err(PauliError::QubitIndex { index: qubit, n });
        }
        let bit = 1u64 << (qubit - 1);
        p.x_bits = x * bit;
        p.z_bits = z * bit;
        p.phase = phase;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> u64 {
        self.x_bits
    }

    pub fn z_bits(&self) -> u64 {
        self.z_bits
    }

    /// Exponent q of the tracked quarter phase i^q, in {0,1,2,3}.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x_bits == 0 && self.z_bits == 0
    }

    /// Number of qubits acted on non-trivially.
    pub fn weight(&self) -> u32 {
        (self.x_bits | self.z_bits).count_ones()
    }

    /// Exact product; the phase stays an integer mod 4.
    pub fn multiply(&self, rhs: &PauliOperator) -> Result<PauliOperator, PauliError> {
        if self.n != rhs.n {
            return Err(PauliError::SizeMismatch {
                left: self.n,
                right: rhs.n,
            });
        }
        // (i^a X^x1 Z^z1)(i^b X^x2 Z^z2): moving Z^z1 past X^x2 picks up
        // (-1)^{z1.x2}.
        let swaps = (self.z_bits & rhs.x_bits).count_ones() as u8;
        Ok(PauliOperator {
            n: self.n,
            x_bits: self.x_bits ^ rhs.x_bits,
            z_bits: self.z_bits ^ rhs.z_bits,
            phase: (self.phase + rhs.phase + 2 * (swaps & 1)) & 3,
        })
    }

    /// Symplectic commutation test: commute iff sum_j (x1 z2 + z1 x2) is even.
    pub fn commutes(&self, rhs: &PauliOperator) -> Result<bool, PauliError> {
        if self.n != rhs.n {
            return Err(PauliError::SizeMismatch {
                left: self.n,
                right: rhs.n,
            });
        }
        let parity = ((self.x_bits & rhs.z_bits) ^ (self.z_bits & rhs.x_bits)).count_ones();
        Ok(parity.is_multiple_of(2))
    }

    /// A Pauli is Hermitian iff it squares to +I, i.e. iff the tracked phase
    /// plus the Y-count is even.
    pub fn is_hermitian(&self) -> bool {
        (self.phase as u32 + (self.x_bits & self.z_bits).count_ones()).is_multiple_of(2)
    }

    /// Action on a computational basis state (dense index, qubit 1 = MSB):
    /// `P |b> = i^q |b'>`. Returns `(b', q)`.
    pub fn apply_to_basis(&self, b: usize) -> (usize, u8) {
        let xd = reverse_bits(self.x_bits, self.n);
        let zd = reverse_bits(self.z_bits, self.n);
        // X^x Z^z |b> = (-1)^{z.b} |b ^ x>
        let sign = ((zd & b as u64).count_ones() & 1) as u8;
        ((b as u64 ^ xd) as usize, (self.phase + 2 * sign) & 3)
    }

    /// Dense matrix realization `i^q (x)_j (X^{x_j} Z^{z_j})`, qubit 1 leftmost.
    pub fn dense_matrix(&self) -> Result<CMatrix, PauliError> {
        if self.n > DENSE_QUBIT_CAP {
            return Err(PauliError::DenseCap {
                n: self.n,
                cap: DENSE_QUBIT_CAP,
            });
        }
        let dim = 1usize << self.n;
        let mut m = CMatrix::zeros(dim);
        for b in 0..dim {
            let (bp, q) = self.apply_to_basis(b);
            m[(bp, b)] = quarter_phase(q);
        }
        Ok(m)
    }

    /// Parse from the text grammar: optional prefix `+`, `-`, `i`, `-i` (also
    /// `+i`), then exactly `n` characters from `{I, X, Y, Z}`.
    pub fn parse(text: &str, n: usize) -> Result<Self, PauliError> {
        let mut p = Self::identity(n)?;
        let bytes = text.as_bytes();
        let mut pos = 0usize;
        let mut prefix: u8 = 0;
        let mut sign_seen = false;
        if pos < bytes.len() && (bytes[pos] == b'+' || bytes[pos] == b'-') {
            if bytes[pos] == b'-' {
                prefix = 2;
            }
            sign_seen = true;
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'i' {
            prefix = (prefix + 1) & 3;
            pos += 1;
        } else if sign_seen && pos >= bytes.len() {
            return Err(PauliError::Parse {
                position: pos,
                message: String::from("expected Pauli letters after sign"),
            });
        }
        let body = &bytes[pos..];
        if body.len() != n {
            return Err(PauliError::Parse {
                position: pos,
                message: format!("expected {} Pauli letters, found {}", n, body.len()),
            });
        }
        let mut y_count: u8 = 0;
        for (j, &c) in body.iter().enumerate() {
            let bit = 1u64 << j;
            match c {
                b'I' => {}
                b'X' => p.x_bits |= bit,
                b'Z' => p.z_bits |= bit,
                b'Y' => {
                    p.x_bits |= bit;
                    p.z_bits |= bit;
                    y_count = (y_count + 1) & 3;
                }
                other => {
                    return Err(PauliError::Parse {
                        position: pos + j,
                        message: format!("invalid Pauli letter '{}'", other as char),
                    });
                }
            }
        }
        p.phase = (prefix + y_count) & 3;
        Ok(p)
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // The printed phase is relative to the literal letters: each Y absorbs
        // one factor of i from the stored X^x Z^z form.
        let y_count = ((self.x_bits & self.z_bits).count_ones() & 3) as u8;
        let prefix = (self.phase + 4 - y_count) & 3;
        match prefix {
            0 => {}
            1 => write!(f, "i")?,
            2 => write!(f, "-")?,
            _ => write!(f, "-i")?,
        }
        for j in 0..self.n {
            let x = (self.x_bits >> j) & 1;
            let z = (self.z_bits >> j) & 1;
            let c = match (x, z) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (0, 1) => 'Z',
                _ => 'Y',
            };
            write!(f, "{}", c)?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliOperator({})", self)
    }
}

fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Reverse the low `n` bits, converting between qubit-index order (bit j-1 =
/// qubit j) and dense basis-index order (qubit 1 = MSB).
fn reverse_bits(bits: u64, n: usize) -> u64 {
    let mut out = 0u64;
    for j in 0..n {
        if bits >> j & 1 == 1 {
            out |= 1 << (n - 1 - j);
        }
    }
    out
}

/// i^q as a complex number.
pub fn quarter_phase(q: u8) -> C64 {
    match q & 3 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str, n: usize) -> PauliOperator {
        PauliOperator::parse(s, n).unwrap()
    }

    fn dense_eq(a: &CMatrix, b: &CMatrix) -> bool {
        (a - b).max_abs() == 0.0
    }

    #[test]
    fn x_times_z_is_minus_i_y() {
        let x = parse("X", 1);
        let z = parse("Z", 1);
        let prod = x.multiply(&z).unwrap();
        // -iY stored as X Z with no extra phase
        assert_eq!(prod, PauliOperator::from_parts(1, 1, 1, 0).unwrap());
        assert_eq!(format!("{}", prod), "-iY");
        // and the dense value is [[0,-1],[1,0]]
        let d = prod.dense_matrix().unwrap();
        assert_eq!(d[(0, 1)], C64::new(-1.0, 0.0));
        assert_eq!(d[(1, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn identity_is_neutral() {
        let id = PauliOperator::identity(3).unwrap();
        for s in ["XIX", "ZZZ", "iYIZ", "-XXI"] {
            let p = parse(s, 3);
            assert_eq!(id.multiply(&p).unwrap(), p);
            assert_eq!(p.multiply(&id).unwrap(), p);
        }
    }

    #[test]
    fn stabilizer_generator_product_against_dense_oracle() {
        // (X1 X3)(X2 X3) = X1 X2 with phase +1
        let m1 = parse("XIX", 3);
        let m2 = parse("IXX", 3);
        let prod = m1.multiply(&m2).unwrap();
        assert_eq!(prod, parse("XXI", 3));
        assert_eq!(prod.phase(), 0);
        let oracle = m1
            .dense_matrix()
            .unwrap()
            .matmul(&m2.dense_matrix().unwrap());
        assert!(dense_eq(&oracle, &prod.dense_matrix().unwrap()));
    }

    #[test]
    fn commutation_of_code_errors_with_generators() {
        let m1 = parse("XIX", 3);
        let m2 = parse("IXX", 3);
        let z1 = parse("ZII", 3);
        let z3 = parse("IIZ", 3);
        // Z3 anticommutes with both generators (paper's c3 = 11)
        assert!(!z3.commutes(&m1).unwrap());
        assert!(!z3.commutes(&m2).unwrap());
        // Z1 shares no support with M2 = X2X3
        assert!(z1.commutes(&m2).unwrap());
        // Direct computation: Z1 anticommutes with M1 = X1X3 (dense oracle below)
        assert!(!z1.commutes(&m1).unwrap());
        let a = z1.dense_matrix().unwrap();
        let b = m1.dense_matrix().unwrap();
        let comm = &a.matmul(&b) - &b.matmul(&a);
        assert!(comm.max_abs() > 1.0); // genuinely anticommuting, not zero
    }

    #[test]
    fn dense_of_z_and_minus_i_y() {
        let z = parse("Z", 1).dense_matrix().unwrap();
        assert_eq!(z[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(z[(1, 1)], C64::new(-1.0, 0.0));
        let miy = parse("-iY", 1);
        let d = miy.dense_matrix().unwrap();
        assert_eq!(d[(0, 0)], C64::new(0.0, 0.0));
        assert_eq!(d[(0, 1)], C64::new(-1.0, 0.0));
        assert_eq!(d[(1, 0)], C64::new(1.0, 0.0));
        assert_eq!(d[(1, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn dense_x1x3_is_bit_flip_permutation() {
        let p = parse("XIX", 3);
        let d = p.dense_matrix().unwrap();
        // Kronecker oracle: X (x) I (x) X
        let x = parse("X", 1).dense_matrix().unwrap();
        let i = parse("I", 1).dense_matrix().unwrap();
        let oracle = x.kron(&i).kron(&x);
        assert!(dense_eq(&d, &oracle));
        // and it is the permutation b -> b XOR 0b101 (qubit 1 = MSB)
        for b in 0..8usize {
            assert_eq!(d[(b ^ 0b101, b)], C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn parse_round_trip_and_errors() {
        for s in ["XIX", "-iY", "iZZI", "-XYZI", "IIII"] {
            let n = s.trim_start_matches(['+', '-', 'i']).len();
            let p = PauliOperator::parse(s, n).unwrap();
            let shown = format!("{}", p);
            assert_eq!(PauliOperator::parse(&shown, n).unwrap(), p);
        }
        // length mismatch
        let err = PauliOperator::parse("ZZZZ", 3).unwrap_err();
        assert!(matches!(err, PauliError::Parse { .. }));
        // bad letter, with position
        match PauliOperator::parse("XQZ", 3).unwrap_err() {
            PauliError::Parse { position, .. } => assert_eq!(position, 1),
            other => panic!("unexpected error {other:?}"),
        }
        // size mismatch on multiply
        let a = parse("X", 1);
        let b = parse("XX", 2);
        assert!(matches!(
            a.multiply(&b),
            Err(PauliError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn minus_iy_parses_to_plain_xz() {
        // -iY = XZ exactly: stored with zero quarter phase so the dense
        // realization matches i^q X^x Z^z.
        let p = parse("-iY", 1);
        assert_eq!((p.x_bits(), p.z_bits(), p.phase()), (1, 1, 0));
    }

    #[test]
    fn exhaustive_two_qubit_products_match_dense_oracle() {
        // every phase/operator pair at n = 2
        let mut all = Vec::new();
        for x in 0..4u64 {
            for z in 0..4u64 {
                for q in 0..4u8 {
                    all.push(PauliOperator::from_parts(2, x, z, q).unwrap());
                }
            }
        }
        for p in &all {
            let dp = p.dense_matrix().unwrap();
            for q in &all {
                let dq = q.dense_matrix().unwrap();
                let prod = p.multiply(q).unwrap();
                assert!(dense_eq(&dp.matmul(&dq), &prod.dense_matrix().unwrap()));
                let pq = dp.matmul(&dq);
                let qp = dq.matmul(&dp);
                let dense_commute = (&pq - &qp).max_abs() == 0.0;
                assert_eq!(p.commutes(q).unwrap(), dense_commute);
            }
        }
    }

    #[test]
    fn symplectic_commutation_matches_state_action_at_n8() {
        // state-action oracle: P Q |b> and Q P |b> compared exactly on every
        // basis state, using only the per-state phase rule
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 8;
        for _ in 0..1000 {
            let p = PauliOperator::from_parts(
                n,
                rng.random::<u64>() & 0xff,
                rng.random::<u64>() & 0xff,
                rng.random::<u8>() & 3,
            )
            .unwrap();
            let q = PauliOperator::from_parts(
                n,
                rng.random::<u64>() & 0xff,
                rng.random::<u64>() & 0xff,
                rng.random::<u8>() & 3,
            )
            .unwrap();
            let mut equal = true;
            for b in 0..(1usize << n) {
                let (b1, ph1) = q.apply_to_basis(b);
                let (b2, ph2) = p.apply_to_basis(b1);
                let (b3, ph3) = p.apply_to_basis(b);
                let (b4, ph4) = q.apply_to_basis(b3);
                if b2 != b4 || (ph1 + ph2) & 3 != (ph3 + ph4) & 3 {
                    equal = false;
                    break;
                }
            }
            assert_eq!(p.commutes(&q).unwrap(), equal);
        }
    }

    #[test]
    fn dense_realization_respects_the_qubit_cap() {
        let p = PauliOperator::identity(13).unwrap();
        assert!(matches!(
            p.dense_matrix(),
            Err(PauliError::DenseCap { n: 13, cap: 12 })
        ));
        assert!(PauliOperator::identity(12).unwrap().dense_matrix().is_ok());
    }

    #[test]
    fn hermiticity_rule_matches_dense() {
        for x in 0..4u64 {
            for z in 0..4u64 {
                for q in 0..4u8 {
                    let p = PauliOperator::from_parts(2, x, z, q).unwrap();
                    let d = p.dense_matrix().unwrap();
                    assert_eq!(p.is_hermitian(), d.hermiticity_residual() == 0.0);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn multiply_is_associative(
            xs in prop::array::uniform3(0u64..8),
            zs in prop::array::uniform3(0u64..8),
            qs in prop::array::uniform3(0u8..4),
        ) {
            let p = PauliOperator::from_parts(3, xs[0], zs[0], qs[0]).unwrap();
            let q = PauliOperator::from_parts(3, xs[1], zs[1], qs[1]).unwrap();
            let r = PauliOperator::from_parts(3, xs[2], zs[2], qs[2]).unwrap();
            let left = p.multiply(&q).unwrap().multiply(&r).unwrap();
            let right = p.multiply(&q.multiply(&r).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn squares_to_plus_or_minus_identity(
            x in 0u64..256, z in 0u64..256, q in 0u8..4,
        ) {
            let p = PauliOperator::from_parts(8, x, z, q).unwrap();
            let sq = p.multiply(&p).unwrap();
            prop_assert!(sq.is_identity_up_to_phase());
            prop_assert!(sq.phase().is_multiple_of(2));
        }

        #[test]
        fn format_parse_round_trip(
            x in 0u64..32, z in 0u64..32, q in 0u8..4,
        ) {
            let p = PauliOperator::from_parts(5, x, z, q).unwrap();
            let shown = format!("{}", p);
            prop_assert_eq!(PauliOperator::parse(&shown, 5).unwrap(), p);
        }
    }
}
