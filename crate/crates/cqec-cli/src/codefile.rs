//! Code definition files: structured text describing a stabilizer code.
//!
//! ```toml
//! name = "phase3"
//! n = 3
//! k = 1
//! generators = ["XIX", "IXX"]
//! logical_pointers = ["ZZZ"]
//! errors = ["ZII", "IZI", "IIZ"]
//! # user-supplied codes must carry their logical basis explicitly:
//! # logical_basis = [ [[re, im], ...], ... ]   (2^n rows of 2^n entries)
//! ```
//!
//! The built-in three-qubit phase code is addressable by the name `phase3`
//! with no file at all.

use std::path::Path;

use cqec_core::matrix::{CMatrix, C64};
use cqec_core::pauli::PauliOperator;
use cqec_core::{three_qubit_phase_code, StabilizerCode};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeFile {
    #[serde(default)]
    pub name: Option<String>,
    pub n: usize,
    pub k: usize,
    pub generators: Vec<String>,
    pub logical_pointers: Vec<String>,
    pub errors: Vec<String>,
    /// Rows of [re, im] pairs; required (the encoding circuit of a user code
    /// is not synthesized automatically).
    pub logical_basis: Vec<Vec<[f64; 2]>>,
}

impl CodeFile {
    pub fn into_code(self) -> Result<StabilizerCode, CliError> {
        let parse_all = |texts: &[String]| -> Result<Vec<PauliOperator>, CliError> {
            texts
                .iter()
                .map(|t| {
                    PauliOperator::parse(t, self.n)
                        .map_err(|e| CliError::Config(format!("operator {t:?}: {e}")))
                })
                .collect()
        };
        let generators = parse_all(&self.generators)?;
        let logical_pointers = parse_all(&self.logical_pointers)?;
        let errors = parse_all(&self.errors)?;

        let dim = 1usize << self.n;
        if self.logical_basis.len() != dim || self.logical_basis.iter().any(|row| row.len() != dim)
        {
            return Err(CliError::Config(format!(
                "logical_basis must be {dim} rows of {dim} [re, im] entries"
            )));
        }
        let basis = CMatrix::from_fn(dim, |i, j| {
            C64::new(self.logical_basis[i][j][0], self.logical_basis[i][j][1])
        });

        StabilizerCode::new(self.n, self.k, generators, logical_pointers, errors, basis)
            .map_err(|e| CliError::InvalidCode(e.to_string()))
    }
}

/// Resolve a code by name or file path. `phase3` is built in; anything else
/// is read as a TOML code definition file.
pub fn resolve_code(spec: &str) -> Result<StabilizerCode, CliError> {
    if spec == "phase3" {
        return Ok(three_qubit_phase_code());
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read code file {spec:?}: {e}")))?;
    let file: CodeFile =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("code file {spec:?}: {e}")))?;
    file.into_code()
}
