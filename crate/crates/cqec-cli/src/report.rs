//! Run reports: per-engine output summary and the pairwise comparison table.

use std::fmt;
use std::path::PathBuf;

use cqec_core::{Scenario, StepRecord};

use crate::config::{CompareSection, EngineKind};
use crate::engines::EngineOutput;
use crate::CliError;

/// Outcome of comparing two engines over their shared observables.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub left: EngineKind,
    pub right: EngineKind,
    pub max_deviation: f64,
    pub worst_time: f64,
    pub worst_observable: String,
    /// For Monte Carlo pairs: the largest deviation in units of the
    /// standard error.
    pub max_sigma: Option<f64>,
    pub tolerance_text: String,
    pub passed: bool,
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} vs {}: max deviation {:.3e} at t={:.6} ({}{}), tolerance {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.left,
            self.right,
            self.max_deviation,
            self.worst_time,
            self.worst_observable,
            self.max_sigma
                .map(|s| format!(", {s:.2} sigma"))
                .unwrap_or_default(),
            self.tolerance_text,
        )
    }
}

fn observable_names(syndrome_count: usize) -> Vec<String> {
    StepRecord::column_names(syndrome_count)[1..].to_vec()
}

/// Align two record series by time. Engines on the same grid align exactly;
/// the Monte Carlo grid is matched within half a step.
fn aligned_pairs<'a>(
    a: &'a [StepRecord],
    b: &'a [StepRecord],
) -> Result<Vec<(&'a StepRecord, &'a StepRecord, usize)>, CliError> {
    let (sparse, dense, swapped) = if a.len() <= b.len() {
        (a, b, false)
    } else {
        (b, a, true)
    };
    let mut out = Vec::with_capacity(sparse.len());
    for (i, rec) in sparse.iter().enumerate() {
        let found = dense.iter().position(|d| (d.t - rec.t).abs() < 5e-10);
        let Some(j) = found else {
            return Err(CliError::Config(format!(
                "no matching record at t = {} when comparing engines; align sample \
                 times with the record grid",
                rec.t
            )));
        };
        if swapped {
            out.push((&dense[j], rec, i));
        } else {
            out.push((rec, &dense[j], i));
        }
    }
    Ok(out)
}

/// Compare two engine outputs over their shared (non-NaN) observables.
pub fn compare_outputs(
    a: &EngineOutput,
    b: &EngineOutput,
    tolerances: &CompareSection,
    syndrome_count: usize,
) -> Result<Comparison, CliError> {
    let names = observable_names(syndrome_count);
    // a Monte Carlo side, if any, supplies the statistical band
    let (mc, det) = match (a.standard_errors.is_some(), b.standard_errors.is_some()) {
        (true, false) => (Some(a), Some(b)),
        (false, true) => (Some(b), Some(a)),
        _ => (None, None),
    };

    let mut max_dev = 0.0f64;
    let mut worst = (0.0f64, String::from("-"));
    let mut max_sigma_seen: Option<f64> = None;
    let mut passed = true;
    let tolerance_text;

    if let (Some(mc_out), Some(det_out)) = (mc, det) {
        tolerance_text = format!("{} sigma", tolerances.mc_sigma);
        let ses = mc_out
            .standard_errors
            .as_ref()
            .expect("mc has standard errors");
        // align on the Monte Carlo records so the slot indexes the errors
        let mut pairs = Vec::with_capacity(mc_out.records.len());
        for (slot, rec) in mc_out.records.iter().enumerate() {
            let Some(det_rec) = det_out.records.iter().find(|d| (d.t - rec.t).abs() < 5e-10) else {
                return Err(CliError::Config(format!(
                    "no matching record at t = {} when comparing engines; align sample \
                     times with the record grid",
                    rec.t
                )));
            };
            pairs.push((rec, det_rec, slot));
        }
        let mut max_sigma = 0.0f64;
        for (mc_rec, det_rec, slot) in pairs {
            let (mv, dv) = (mc_rec.values(), det_rec.values());
            for (c, name) in names.iter().enumerate() {
                let (x, y) = (mv[c + 1], dv[c + 1]);
                if x.is_nan() || y.is_nan() {
                    continue;
                }
                let dev = (x - y).abs();
                let band = tolerances.mc_sigma * ses[slot][c] + 1e-12;
                let sigma = dev / (ses[slot][c] + 1e-15);
                if dev > max_dev {
                    max_dev = dev;
                    worst = (mc_rec.t, name.clone());
                }
                max_sigma = max_sigma.max(sigma);
                if dev > band {
                    passed = false;
                    worst = (mc_rec.t, name.clone());
                }
            }
        }
        max_sigma_seen = Some(max_sigma);
    } else {
        let tolerance = pair_tolerance(a.kind, b.kind, tolerances);
        tolerance_text = format!("{tolerance:.1e}");
        let pairs = aligned_pairs(&a.records, &b.records)?;
        for (ra, rb, _) in pairs {
            let (va, vb) = (ra.values(), rb.values());
            for (c, name) in names.iter().enumerate() {
                let (x, y) = (va[c + 1], vb[c + 1]);
                if x.is_nan() || y.is_nan() {
                    continue;
                }
                let dev = (x - y).abs();
                if dev > max_dev {
                    max_dev = dev;
                    worst = (ra.t, name.clone());
                }
            }
        }
        passed = max_dev <= tolerance;
    }

    Ok(Comparison {
        left: a.kind,
        right: b.kind,
        max_deviation: max_dev,
        worst_time: worst.0,
        worst_observable: worst.1,
        max_sigma: max_sigma_seen,
        tolerance_text,
        passed,
    })
}

fn pair_tolerance(a: EngineKind, b: EngineKind, t: &CompareSection) -> f64 {
    use EngineKind::*;
    match (a, b) {
        (Dense, Block) | (Block, Dense) => t.dense_block,
        (Dense, Analytic) | (Analytic, Dense) => t.dense_analytic,
        (Block, Analytic) | (Analytic, Block) => t.block_analytic,
        _ => t.dense_block,
    }
}

/// Full report of one scenario run: what ran, where the files went, and how
/// the engines compare.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    pub scenario: Scenario,
    pub engine_files: Vec<(EngineKind, Option<PathBuf>, usize)>,
    pub warnings: Vec<String>,
    pub comparisons: Vec<Comparison>,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.comparisons.iter().all(|c| c.passed)
    }

    /// First failing comparison, for the exit-4 diagnostic.
    pub fn first_breach(&self) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| !c.passed)
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "run {}", self.name)?;
        let s = &self.scenario;
        writeln!(
            f,
            "  scenario: gamma={} gamma_prime={} omega={} bloch=[{}, {}, {}] t_max={} dt={}",
            s.gamma,
            s.gamma_prime,
            s.omega,
            s.initial_bloch[0],
            s.initial_bloch[1],
            s.initial_bloch[2],
            s.t_max,
            s.dt
        )?;
        for (kind, path, rows) in &self.engine_files {
            match path {
                Some(p) => writeln!(f, "  engine {kind}: {rows} records -> {}", p.display())?,
                None => writeln!(f, "  engine {kind}: {rows} records")?,
            }
        }
        for w in &self.warnings {
            writeln!(f, "  warning: {w}")?;
        }
        if !self.comparisons.is_empty() {
            writeln!(f, "  comparisons:")?;
            for c in &self.comparisons {
                writeln!(f, "    {c}")?;
            }
        }
        Ok(())
    }
}
