//! Continuous quantum error correction on small stabilizer codes.
//!
//! An encoded qubit evolving under a Markovian master equation with three
//! ingredients — Hamiltonian drive, environmental error channels, and
//! corrective quantum-jump channels that continuously reset the syndrome —
//! can be simulated here through four independent routes:
//!
//! - [`lindblad`]: dense integration of the full master equation on the
//!   2^n-dimensional Hilbert space (the ground truth),
//! - [`blocks`]: reduced ODEs for the per-syndrome probabilities and Bloch
//!   vectors,
//! - [`analytic`]: closed-form solutions for the free (undriven) case,
//! - [`trajectory`]: a seeded quantum-jump Monte Carlo unraveling.
//!
//! All four must agree; the crate's test suites are built around exactly
//! that cross-validation. [`pauli`] and [`code`] supply the operator algebra
//! and the stabilizer-code machinery (syndromes, recovery operators, logical
//! basis) that the engines are built from.
//!
//! The crate is `no_std` (with `alloc`); IO, configuration files, and the
//! command-line frontend live in the companion `cqec-cli` crate.

#![cfg_attr(not(test), no_std)]
// index-matched loops in the small fixed-size vector math read better than
// iterator chains here
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod analytic;
pub mod blocks;
pub mod code;
pub mod fit;
pub mod lindblad;
pub mod matrix;
pub mod pauli;
pub mod scenario;
pub mod tol;
pub mod trajectory;

pub use code::{three_qubit_phase_code, ErrorAction, StabilizerCode, ValidationReport};
pub use lindblad::{DensityMatrix, DynamicsError, LindbladSpec};
pub use matrix::{CMatrix, CVector, C64};
pub use pauli::PauliOperator;
pub use scenario::{Scenario, StepRecord};
