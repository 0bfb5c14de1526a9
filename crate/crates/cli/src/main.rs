//! `pulse`: pipeline driver for training, refining, and evaluating
//! detuning-robust gate pulses.
//!
//! Every command reads one strict-schema JSON config and writes its
//! artifacts into `--out`; all outputs record the tool version and the
//! SHA-256 of the effective config, so a run is reproducible from its
//! files. Exit codes: 0 success, 2 config error, 3 numerical failure.

mod commands;
mod config;
mod output;
mod pulses;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    /// Classify a core error by its nature.
    pub fn from_core(e: pulse_core::Error) -> Self {
        use pulse_core::Error as E;
        match e {
            E::Diverged { .. }
            | E::NonFiniteField { .. }
            | E::NonFiniteGradient { .. }
            | E::NonFiniteLoss { .. }
            | E::NotUnitary { .. }
            | E::NotNormalized { .. }
            | E::NotSpecialUnitary { .. }
            | E::BadDataset(_) => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<pulse_core::Error> for CliError {
    fn from(e: pulse_core::Error) -> Self {
        CliError::from_core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "pulse", version, about = "Detuning-robust pulse design and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the JSON config for the chosen command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Override the config's RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (falls back to the PULSE_THREADS environment
    /// variable, then to the machine default).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a control network on the qubit.
    Train,
    /// Resume training a qubit checkpoint on the qutrit model.
    Refine,
    /// Tomography sweep of a pulse over a detuning grid.
    Sweep,
    /// Compare transfer-efficiency windows of several pulses.
    Compare,
    /// Export a checkpoint as an AWG-ready I/Q table.
    Export,
    /// Score a recorded waveform against a checkpoint.
    Verify,
    /// Pseudo-identity decay benchmark under T1/T2 noise.
    Decay,
}

fn init_threads(requested: Option<usize>) -> CliResult<()> {
    let n = match requested {
        Some(n) => Some(n),
        None => match std::env::var("PULSE_THREADS") {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                CliError::Config(format!("PULSE_THREADS must be an integer, got {v:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Config("thread count must be at least 1".into()));
        }
        rayon_global(n)?;
    }
    Ok(())
}

fn rayon_global(n: usize) -> CliResult<()> {
    pulse_core::rayon_thread_pool(n)
        .map_err(|e| CliError::Config(format!("could not size the thread pool: {e}")))
}

fn run() -> CliResult<()> {
    let cli = Cli::parse();
    init_threads(cli.threads)?;
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let raw = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    std::fs::create_dir_all(&cli.out)?;

    match cli.command {
        Command::Train => commands::train(&raw, &cli.out, cli.seed, false),
        Command::Refine => commands::train(&raw, &cli.out, cli.seed, true),
        Command::Sweep => commands::sweep(&raw, &cli.out, cli.seed),
        Command::Compare => commands::compare(&raw, &cli.out, cli.seed),
        Command::Export => commands::export(&raw, &cli.out),
        Command::Verify => commands::verify(&raw, &cli.out),
        Command::Decay => commands::decay(&raw, &cli.out, cli.seed),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pulse: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
