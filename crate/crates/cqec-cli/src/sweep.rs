//! Parameter sweeps over the rates: per grid point, run one engine, fit the
//! slow decay rate of the transverse component, and record the stationary
//! correct-syndrome probability.

use std::path::{Path, PathBuf};

use cqec_core::analytic::decay_rates;
use cqec_core::fit;
use cqec_core::{Scenario, StabilizerCode, StepRecord};
use rayon::prelude::*;

use crate::config::{ConfigFile, EngineKind};
use crate::csvio;
use crate::engines::run_engine;
use crate::CliError;

/// One sweep point with its fitted and exact quantities.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub gamma: f64,
    pub gamma_prime: f64,
    pub epsilon: f64,
    /// p0 at the end of the run.
    pub p0_stationary: f64,
    /// (gamma + gamma') / (gamma + 4 gamma').
    pub p0_stationary_exact: f64,
    /// Fitted decay rate of y(t) over the fit window; NaN when y has no
    /// usable data there.
    pub y_slow_rate: f64,
    pub lambda_plus_exact: f64,
    /// Strong-correction estimate 12 gamma epsilon^2.
    pub strong_correction_rate: f64,
}

pub const SWEEP_COLUMNS: &str = "gamma,gamma_prime,epsilon,p0_stationary,\
p0_stationary_exact,y_slow_rate,lambda_plus_exact,strong_correction_rate";

/// Expand the sweep grid into (gamma, gamma_prime) pairs.
pub fn grid(cfg: &ConfigFile) -> Result<Vec<(f64, f64)>, CliError> {
    let Some(sweep) = &cfg.sweep else {
        return Err(CliError::Config(String::from(
            "config has no [sweep] section",
        )));
    };
    let base = cfg.base_scenario()?;
    let mut points = Vec::new();
    if !sweep.epsilon.is_empty() {
        if base.gamma <= 0.0 {
            return Err(CliError::Config(String::from(
                "an epsilon sweep needs a positive scenario gamma",
            )));
        }
        for &eps in &sweep.epsilon {
            points.push((base.gamma, base.gamma * eps));
        }
    } else {
        let gammas = if sweep.gamma.is_empty() {
            vec![base.gamma]
        } else {
            sweep.gamma.clone()
        };
        let gps = if sweep.gamma_prime.is_empty() {
            vec![base.gamma_prime]
        } else {
            sweep.gamma_prime.clone()
        };
        for &g in &gammas {
            for &gp in &gps {
                points.push((g, gp));
            }
        }
    }
    if points.is_empty() {
        return Err(CliError::Config(String::from("sweep grid is empty")));
    }
    Ok(points)
}

fn fit_slow_rate(records: &[StepRecord], window: [f64; 2]) -> f64 {
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for rec in records {
        if rec.t >= window[0] && rec.t <= window[1] && rec.bloch[0][1] > 0.0 {
            ts.push(rec.t);
            ys.push(rec.bloch[0][1]);
        }
    }
    if ts.len() < 8 {
        return f64::NAN;
    }
    fit::fitted_decay_rate(&ts, &ys).unwrap_or(f64::NAN)
}

/// Run every grid point (concurrently; the grid order is preserved), write
/// one time-series CSV per point plus the aggregate table, and return the
/// points.
pub fn run_sweep(
    cfg: &ConfigFile,
    code: &StabilizerCode,
    out_dir: &Path,
    stem: &str,
    seed: u64,
) -> Result<(Vec<SweepPoint>, Vec<PathBuf>), CliError> {
    let points = grid(cfg)?;
    let engine = cfg
        .sweep
        .as_ref()
        .map(|s| s.engine)
        .unwrap_or(EngineKind::Block);
    let base = cfg.base_scenario()?;
    let window = cfg
        .sweep
        .as_ref()
        .and_then(|s| s.fit_window)
        .unwrap_or([base.t_max / 2.0, base.t_max]);

    let results: Vec<(SweepPoint, PathBuf, Vec<StepRecord>)> = points
        .par_iter()
        .map(|&(gamma, gamma_prime)| {
            let scenario = Scenario {
                gamma,
                gamma_prime,
                ..base.clone()
            };
            scenario
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
            let output = run_engine(engine, &scenario, code, cfg, seed)?;
            let last = output
                .records
                .last()
                .ok_or_else(|| CliError::Integration(String::from("empty engine output")))?;
            let rates = decay_rates(gamma, gamma_prime);
            let epsilon = if gamma > 0.0 {
                gamma_prime / gamma
            } else {
                f64::NAN
            };
            let point = SweepPoint {
                gamma,
                gamma_prime,
                epsilon,
                p0_stationary: last.probs[0],
                p0_stationary_exact: if gamma + gamma_prime > 0.0 {
                    (gamma + gamma_prime) / (gamma + 4.0 * gamma_prime)
                } else {
                    1.0
                },
                y_slow_rate: fit_slow_rate(&output.records, window),
                lambda_plus_exact: rates.lambda_plus,
                strong_correction_rate: if epsilon.is_nan() {
                    f64::NAN
                } else {
                    12.0 * gamma * epsilon * epsilon
                },
            };
            let path = out_dir.join(format!(
                "{stem}_{}_g{gamma}_gp{gamma_prime}.csv",
                engine.name()
            ));
            Ok((point, path, output.records))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut sweep_points = Vec::with_capacity(results.len());
    let mut files = Vec::new();
    for (point, path, records) in results {
        csvio::write_records(&path, code.syndrome_count(), &records)?;
        files.push(path);
        sweep_points.push(point);
    }

    let aggregate = out_dir.join(format!("{stem}_sweep.csv"));
    let mut body = String::from(SWEEP_COLUMNS);
    body.push('\n');
    for p in &sweep_points {
        body.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            p.gamma,
            p.gamma_prime,
            p.epsilon,
            p.p0_stationary,
            p.p0_stationary_exact,
            p.y_slow_rate,
            p.lambda_plus_exact,
            p.strong_correction_rate
        ));
    }
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(&aggregate, body)?;
    files.push(aggregate);

    Ok((sweep_points, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_grid_expands_from_gamma() {
        let text = r#"
            [scenario]
            gamma = 2.0
            gamma_prime = 0.0
            initial_bloch = [0.0, 1.0, 0.0]
            t_max = 1.0
            dt = 0.001

            [sweep]
            epsilon = [0.1, 0.01]
        "#;
        let cfg = ConfigFile::parse(text).unwrap();
        let g = grid(&cfg).unwrap();
        assert_eq!(g, vec![(2.0, 0.2), (2.0, 0.02)]);
    }

    #[test]
    fn cartesian_grid_and_missing_section() {
        let text = r#"
            [scenario]
            gamma = 1.0
            gamma_prime = 1.0
            initial_bloch = [0.0, 1.0, 0.0]
            t_max = 1.0
            dt = 0.001

            [sweep]
            gamma = [0.0, 1.0]
            gamma_prime = [0.5]
        "#;
        let cfg = ConfigFile::parse(text).unwrap();
        assert_eq!(grid(&cfg).unwrap(), vec![(0.0, 0.5), (1.0, 0.5)]);

        let no_sweep = r#"
            [scenario]
            gamma = 1.0
            gamma_prime = 1.0
            initial_bloch = [0.0, 1.0, 0.0]
            t_max = 1.0
            dt = 0.001
        "#;
        let cfg = ConfigFile::parse(no_sweep).unwrap();
        assert!(grid(&cfg).is_err());
    }
}
