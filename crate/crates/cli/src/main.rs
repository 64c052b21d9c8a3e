//! Declarative scenario runner: parses a TOML config, executes the
//! requested trajectories, transition analyses and region scans, and
//! writes CSV/JSON artifacts suitable for plotting and golden-file tests.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use belldyn::error::Error as CoreError;
use belldyn::phenomena::{detect_transitions, scan_time_invariant_region, simulate_trajectory};

use config::{OutputConfig, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "belldyn",
    version,
    about = "Correlation dynamics of two-qubit Bell-diagonal states under local dephasing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its outputs.
    Run {
        /// Path to the scenario TOML.
        config: PathBuf,
        /// Directory that relative output paths are resolved against.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Worker threads for region scans (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Reserved; all computations are deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a scenario config without running it.
    Validate {
        config: PathBuf,
    },
}

/// Error channel carrying the process exit code: 2 config, 3 numeric,
/// 4 output I/O.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn config(msg: String) -> Self {
        CliError::Config(msg)
    }

    pub fn io(msg: String) -> Self {
        CliError::Io(msg)
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::Io(m) => m,
        }
    }
}

/// Runtime failures from the core map to the numeric exit code; anything
/// parameter-shaped points at the config.
fn core_error(e: CoreError) -> CliError {
    match e {
        CoreError::QuadratureNonConvergence { .. } | CoreError::UndecidedPlateau { .. } => {
            CliError::Numeric(e.to_string())
        }
        other => CliError::Config(other.to_string()),
    }
}

fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    ScenarioConfig::parse(&text)
}

fn run(config_path: &Path, out_dir: &Path, threads: usize) -> Result<(), CliError> {
    if threads > 0 {
        // ignore the error if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let cfg = load_config(config_path)?;
    let built = cfg.build()?;

    // trajectory and transitions outputs share one simulation
    let needs_traj = cfg.outputs.iter().any(|o| {
        matches!(
            o,
            OutputConfig::Trajectory { .. } | OutputConfig::Transitions { .. }
        )
    });
    let trajectory = if needs_traj {
        let grid = built.time_grid.as_ref().expect("validated by build()");
        Some(simulate_trajectory(&built.scenario, grid).map_err(core_error)?)
    } else {
        None
    };

    for out in &cfg.outputs {
        match out {
            OutputConfig::Trajectory { path } => {
                let traj = trajectory.as_ref().expect("simulated above");
                output::write_trajectory(&out_dir.join(path), &built.scenario, traj)?;
            }
            OutputConfig::Transitions { path } => {
                let traj = trajectory.as_ref().expect("simulated above");
                let report = detect_transitions(&built.scenario, traj).map_err(core_error)?;
                output::write_transitions(&out_dir.join(path), &built.scenario, &report)?;
            }
            OutputConfig::RegionScan {
                path,
                s_grid,
                c_grid,
                horizon,
            } => {
                let belldyn::channels::Channel::Spectral(spectral) = &built.scenario.channel
                else {
                    unreachable!("validated by build()");
                };
                let scan = scan_time_invariant_region(
                    &s_grid.values("outputs.s_grid")?,
                    &c_grid.values("outputs.c_grid")?,
                    spectral.profile().spectrum(),
                    built.pulses.as_ref(),
                    built.scenario.side,
                    *horizon,
                )
                .map_err(core_error)?;
                output::write_region_scan(&out_dir.join(path), &scan)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            out_dir,
            threads,
            seed: _,
        } => run(config, out_dir, *threads),
        Command::Validate { config } => load_config(config).and_then(|cfg| cfg.build().map(|_| ())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
