//! Engine orchestration: run any of the four engines for a scenario and
//! return the shared record schema.

use cqec_core::blocks::run_block;
use cqec_core::lindblad::{run_dense, IntegrationOptions};
use cqec_core::trajectory::{
    ideal_states, reduce_mc, run_mc, trajectory_observables, TrajectoryConfig, TrajectoryEngine,
};
use cqec_core::{Scenario, StabilizerCode, StepRecord};
use rayon::prelude::*;

use crate::config::{ConfigFile, EngineKind};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct EngineOutput {
    pub kind: EngineKind,
    pub records: Vec<StepRecord>,
    /// Standard errors per record (Monte Carlo only), one entry per
    /// observable column after t.
    pub standard_errors: Option<Vec<Vec<f64>>>,
    pub warnings: Vec<String>,
}

/// Run one engine. Monte Carlo trajectories are generated in parallel and
/// reduced in index order, so the output is identical to a sequential run.
pub fn run_engine(
    kind: EngineKind,
    scenario: &Scenario,
    code: &StabilizerCode,
    cfg: &ConfigFile,
    seed: u64,
) -> Result<EngineOutput, CliError> {
    let record_every = cfg.run.record_every;
    match kind {
        EngineKind::Dense => {
            let run = run_dense(
                scenario,
                code,
                &IntegrationOptions {
                    record_every,
                    positivity_every: 50,
                },
            )?;
            Ok(EngineOutput {
                kind,
                records: run.records,
                standard_errors: None,
                warnings: run.warnings,
            })
        }
        EngineKind::Block => {
            let run = run_block(scenario, code, record_every)?;
            Ok(EngineOutput {
                kind,
                records: run.records,
                standard_errors: None,
                warnings: vec![],
            })
        }
        EngineKind::Analytic => {
            let records = cqec_core::analytic::run_analytic(scenario, code, record_every)?;
            Ok(EngineOutput {
                kind,
                records,
                standard_errors: None,
                warnings: vec![],
            })
        }
        EngineKind::Mc => {
            let mc_scenario = Scenario {
                dt: cfg.run.mc_dt.unwrap_or(scenario.dt),
                ..scenario.clone()
            };
            let sample_times = cfg.sample_times(scenario);
            let tcfg = TrajectoryConfig {
                scenario: mc_scenario,
                n_trajectories: cfg.run.n_trajectories,
                seed,
                sample_times,
            };
            let run = if tcfg.n_trajectories >= 64 {
                let engine = TrajectoryEngine::new(&tcfg, code)?;
                let recovery = code
                    .recovery_operators()
                    .map_err(cqec_core::DynamicsError::from)?;
                let ideals = ideal_states(&engine);
                let rows = (0..tcfg.n_trajectories)
                    .into_par_iter()
                    .map(|i| {
                        trajectory_observables(&engine, code, &recovery, &ideals, seed, i as u64)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                reduce_mc(&tcfg, code, &engine, rows)?
            } else {
                run_mc(&tcfg, code)?
            };
            Ok(EngineOutput {
                kind,
                records: run.records,
                standard_errors: Some(run.standard_errors),
                warnings: vec![],
            })
        }
    }
}
