//! `cqec`: run and cross-check continuous error correction engines.
//!
//! Exit codes: 0 ok, 1 invalid code, 2 configuration error, 3 integration
//! failure, 4 tolerance breach.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cqec_cli::config::{ConfigFile, EngineKind, Overrides};
use cqec_cli::engines::{run_engine, EngineOutput};
use cqec_cli::report::{compare_outputs, RunReport};
use cqec_cli::{codefile, csvio, sweep, CliError};

#[derive(Parser)]
#[command(
    name = "cqec",
    version,
    about = "Continuous quantum error correction simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Bundled config name (free-decay, strong-correction, figure2,
    /// stationary-p0) or a path to a TOML config.
    #[arg(long)]
    config: String,
    /// Output directory for CSV files and reports.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated engine list overriding the config
    /// (dense|block|analytic|mc).
    #[arg(long, value_delimiter = ',')]
    engines: Option<Vec<String>>,
    /// Monte Carlo seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Integration step override.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time override.
    #[arg(long)]
    tmax: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured engines and write one CSV per engine.
    Simulate(RunArgs),
    /// Run at least two engines and check their agreement; exits 4 on a
    /// tolerance breach.
    Compare(RunArgs),
    /// Validate a stabilizer code by name or definition file.
    Verify {
        /// Code name (`phase3`) or path to a code file.
        code: String,
    },
    /// Run a parameter grid and write per-point series plus an aggregate
    /// table with fitted slow rates and stationary probabilities.
    Sweep {
        #[arg(long)]
        config: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(&args, true).map(|_| ()),
        Command::Compare(args) => compare(&args),
        Command::Verify { code } => verify(&code),
        Command::Sweep { config, out, seed } => run_sweep_cmd(&config, &out, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn overrides_of(args: &RunArgs) -> Result<Overrides, CliError> {
    let engines = match &args.engines {
        None => None,
        Some(list) => Some(
            list.iter()
                .map(|s| EngineKind::parse(s))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    Ok(Overrides {
        engines,
        seed: args.seed,
        dt: args.dt,
        t_max: args.tmax,
    })
}

fn load_verified(
    args: &RunArgs,
) -> Result<(String, ConfigFile, cqec_core::StabilizerCode), CliError> {
    let (stem, cfg) = ConfigFile::load(&args.config)?;
    let code = codefile::resolve_code(&cfg.scenario.code)?;
    let report = code.verify();
    if !report.passed() {
        eprintln!("{report}");
        return Err(CliError::InvalidCode(format!(
            "code {:?} failed validation",
            cfg.scenario.code
        )));
    }
    Ok((stem, cfg, code))
}

fn simulate(args: &RunArgs, write_csv: bool) -> Result<Vec<RunReport>, CliError> {
    let overrides = overrides_of(args)?;
    let (stem, cfg, code) = load_verified(args)?;
    let engines = cfg.engines(&overrides);
    if engines.is_empty() {
        return Err(CliError::Config(String::from("no engines requested")));
    }
    let seed = cfg.seed(&overrides);

    let mut reports = Vec::new();
    for (label, scenario) in cfg.scenarios(&overrides)? {
        let run_name = if label.is_empty() {
            stem.clone()
        } else {
            format!("{stem}_{label}")
        };
        let mut outputs: Vec<EngineOutput> = Vec::new();
        let mut engine_files = Vec::new();
        let mut warnings = Vec::new();
        for &kind in &engines {
            let output = run_engine(kind, &scenario, &code, &cfg, seed)?;
            warnings.extend(output.warnings.iter().cloned());
            let path = if write_csv {
                let path = args.out.join(format!("{run_name}_{}.csv", kind.name()));
                match &output.standard_errors {
                    Some(ses) => {
                        csvio::write_mc_records(&path, code.syndrome_count(), &output.records, ses)?
                    }
                    None => csvio::write_records(&path, code.syndrome_count(), &output.records)?,
                }
                Some(path)
            } else {
                None
            };
            engine_files.push((kind, path, output.records.len()));
            outputs.push(output);
        }

        let mut comparisons = Vec::new();
        for i in 0..outputs.len() {
            for j in (i + 1)..outputs.len() {
                comparisons.push(compare_outputs(
                    &outputs[i],
                    &outputs[j],
                    &cfg.compare,
                    code.syndrome_count(),
                )?);
            }
        }

        reports.push(RunReport {
            name: run_name,
            scenario,
            engine_files,
            warnings,
            comparisons,
        });
    }

    let mut rendered = String::new();
    for report in &reports {
        rendered.push_str(&report.to_string());
    }
    print!("{rendered}");
    if write_csv {
        std::fs::create_dir_all(&args.out)?;
        std::fs::write(args.out.join(format!("{stem}_report.txt")), rendered)?;
    }
    Ok(reports)
}

fn compare(args: &RunArgs) -> Result<(), CliError> {
    let overrides = overrides_of(args)?;
    {
        let (_, cfg) = ConfigFile::load(&args.config)?;
        if cfg.engines(&overrides).len() < 2 {
            return Err(CliError::Config(String::from(
                "compare needs at least two engines",
            )));
        }
    }
    let reports = simulate(args, false)?;
    for report in &reports {
        if let Some(breach) = report.first_breach() {
            return Err(CliError::ToleranceBreach(format!(
                "{} vs {} deviate by {:.3e} on {} at t={:.6} in run {} (tolerance {})",
                breach.left,
                breach.right,
                breach.max_deviation,
                breach.worst_observable,
                breach.worst_time,
                report.name,
                breach.tolerance_text,
            )));
        }
    }
    Ok(())
}

fn verify(code_spec: &str) -> Result<(), CliError> {
    let code = codefile::resolve_code(code_spec)?;
    let report = code.verify();
    print!("{report}");
    if report.passed() {
        println!("code {code_spec:?} is valid");
        Ok(())
    } else {
        Err(CliError::InvalidCode(format!(
            "code {code_spec:?} failed validation"
        )))
    }
}

fn run_sweep_cmd(config: &str, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let (stem, cfg) = ConfigFile::load(config)?;
    let code = codefile::resolve_code(&cfg.scenario.code)?;
    let report = code.verify();
    if !report.passed() {
        eprintln!("{report}");
        return Err(CliError::InvalidCode(format!(
            "code {:?} failed validation",
            cfg.scenario.code
        )));
    }
    let seed = seed.unwrap_or(cfg.run.seed);
    let (points, files) = sweep::run_sweep(&cfg, &code, out, &stem, seed)?;
    println!("{}", sweep::SWEEP_COLUMNS);
    for p in &points {
        println!(
            "{} {} {} {} {} {} {} {}",
            p.gamma,
            p.gamma_prime,
            p.epsilon,
            p.p0_stationary,
            p.p0_stationary_exact,
            p.y_slow_rate,
            p.lambda_plus_exact,
            p.strong_correction_rate
        );
    }
    for f in &files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
