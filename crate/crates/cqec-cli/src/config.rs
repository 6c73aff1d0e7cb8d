//! Run configuration files: a single TOML document describing the scenario,
//! which engines to run, comparison tolerances, optional scenario variants,
//! and (for sweeps) a parameter grid.

use std::fmt;
use std::path::Path;

use cqec_core::Scenario;
use serde::Deserialize;

use crate::CliError;

/// Bundled configurations addressable by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("free-decay", include_str!("../configs/free-decay.toml")),
    (
        "strong-correction",
        include_str!("../configs/strong-correction.toml"),
    ),
    ("figure2", include_str!("../configs/figure2.toml")),
    (
        "stationary-p0",
        include_str!("../configs/stationary-p0.toml"),
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    /// Times are in the same units as the inverse rates (default).
    #[default]
    Absolute,
    /// Times are multiples of 1/gamma'; requires gamma' > 0.
    InverseGammaPrime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Dense,
    Block,
    Analytic,
    Mc,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Dense => "dense",
            EngineKind::Block => "block",
            EngineKind::Analytic => "analytic",
            EngineKind::Mc => "mc",
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "dense" => Ok(EngineKind::Dense),
            "block" => Ok(EngineKind::Block),
            "analytic" => Ok(EngineKind::Analytic),
            "mc" => Ok(EngineKind::Mc),
            other => Err(CliError::Config(format!(
                "unknown engine {other:?} (expected dense|block|analytic|mc)"
            ))),
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub variants: Vec<VariantSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// Code name (`phase3`) or path to a code definition file.
    #[serde(default = "default_code")]
    pub code: String,
    pub gamma: f64,
    pub gamma_prime: f64,
    #[serde(default)]
    pub omega: f64,
    pub initial_bloch: [f64; 3],
    pub t_max: f64,
    pub dt: f64,
    #[serde(default)]
    pub time_unit: TimeUnit,
}

fn default_code() -> String {
    String::from("phase3")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub engines: Vec<EngineKind>,
    /// Keep every k-th integration step in the outputs.
    pub record_every: usize,
    /// Seed of the Monte Carlo engine.
    pub seed: u64,
    pub n_trajectories: usize,
    /// Step used by the Monte Carlo engine; defaults to the scenario dt.
    pub mc_dt: Option<f64>,
    /// Monte Carlo observation times; defaults to nine evenly spaced times.
    pub sample_times: Option<Vec<f64>>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            engines: vec![EngineKind::Dense, EngineKind::Block],
            record_every: 1,
            seed: 1,
            n_trajectories: 10_000,
            mc_dt: None,
            sample_times: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    /// Max abs deviation allowed between the deterministic engines.
    pub dense_block: f64,
    pub dense_analytic: f64,
    pub block_analytic: f64,
    /// Monte Carlo agreement band in standard errors.
    pub mc_sigma: f64,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            dense_block: 1e-7,
            dense_analytic: 1e-6,
            block_analytic: 1e-6,
            mc_sigma: 3.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSection {
    pub label: String,
    pub gamma: Option<f64>,
    pub gamma_prime: Option<f64>,
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Grid over epsilon = gamma'/gamma (gamma from the scenario)...
    pub epsilon: Vec<f64>,
    /// ...or an explicit cartesian grid over the rates.
    pub gamma: Vec<f64>,
    pub gamma_prime: Vec<f64>,
    /// Engine used per point.
    pub engine: EngineKind,
    /// Time window [t0, t1] for the slow-decay fit; defaults to the second
    /// half of the run.
    pub fit_window: Option<[f64; 2]>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            epsilon: Vec::new(),
            gamma: Vec::new(),
            gamma_prime: Vec::new(),
            engine: EngineKind::Block,
            fit_window: None,
        }
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub engines: Option<Vec<EngineKind>>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
}

impl ConfigFile {
    /// Load a configuration by bundled name or path.
    pub fn load(spec: &str) -> Result<(String, Self), CliError> {
        if let Some((name, text)) = BUNDLED.iter().find(|(n, _)| *n == spec) {
            return Ok((String::from(*name), Self::parse(text)?));
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {spec:?}: {e}")))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| String::from("run"));
        Ok((stem, Self::parse(&text)?))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        self.base_scenario()?
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.run.record_every == 0 {
            return Err(CliError::Config(String::from(
                "record_every must be positive",
            )));
        }
        if let Some(dt) = self.run.mc_dt {
            if !dt.is_finite() || dt <= 0.0 {
                return Err(CliError::Config(format!(
                    "mc_dt must be positive, got {dt}"
                )));
            }
        }
        let mut labels = std::collections::HashSet::new();
        for v in &self.variants {
            if !labels.insert(&v.label) {
                return Err(CliError::Config(format!(
                    "duplicate variant label {:?}",
                    v.label
                )));
            }
        }
        Ok(())
    }

    /// The scenario with time-unit scaling applied.
    pub fn base_scenario(&self) -> Result<Scenario, CliError> {
        let s = &self.scenario;
        let scale = match s.time_unit {
            TimeUnit::Absolute => 1.0,
            TimeUnit::InverseGammaPrime => {
                if s.gamma_prime <= 0.0 {
                    return Err(CliError::Config(String::from(
                        "time_unit inverse_gamma_prime needs gamma_prime > 0",
                    )));
                }
                1.0 / s.gamma_prime
            }
        };
        Ok(Scenario {
            gamma: s.gamma,
            gamma_prime: s.gamma_prime,
            omega: s.omega,
            initial_bloch: s.initial_bloch,
            t_max: s.t_max * scale,
            dt: s.dt * scale,
        })
    }

    /// All (label, scenario) pairs this config describes: the base scenario
    /// when no variants are given, otherwise one per variant.
    pub fn scenarios(&self, overrides: &Overrides) -> Result<Vec<(String, Scenario)>, CliError> {
        let mut base = self.base_scenario()?;
        if let Some(dt) = overrides.dt {
            base.dt = dt;
        }
        if let Some(t_max) = overrides.t_max {
            base.t_max = t_max;
        }
        let mut out = Vec::new();
        if self.variants.is_empty() {
            out.push((String::new(), base));
        } else {
            for v in &self.variants {
                let mut s = base.clone();
                if let Some(g) = v.gamma {
                    s.gamma = g;
                }
                if let Some(gp) = v.gamma_prime {
                    s.gamma_prime = gp;
                }
                if let Some(w) = v.omega {
                    s.omega = w;
                }
                out.push((v.label.clone(), s));
            }
        }
        for (_, s) in &out {
            s.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn engines(&self, overrides: &Overrides) -> Vec<EngineKind> {
        let mut engines = overrides
            .engines
            .clone()
            .unwrap_or_else(|| self.run.engines.clone());
        engines.dedup();
        engines
    }

    pub fn seed(&self, overrides: &Overrides) -> u64 {
        overrides.seed.unwrap_or(self.run.seed)
    }

    /// Observation times of the Monte Carlo engine.
    pub fn sample_times(&self, scenario: &Scenario) -> Vec<f64> {
        self.run
            .sample_times
            .clone()
            .unwrap_or_else(|| (0..=8).map(|i| i as f64 * scenario.t_max / 8.0).collect())
    }
}
