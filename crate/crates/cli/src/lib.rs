//! Reproducible file-based workflows on top of `librotor`.

mod analyze;
mod classify;
mod files;
mod record;
mod scanfit;
mod simulate;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use thiserror::Error;

use librotor::io::IoError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or invalid input; exit code 2.
    #[error("{0}")]
    Input(String),
    /// Inputs were fine but the analysis could not produce a result; exit code 3.
    #[error("{0}")]
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Analysis(_) => 3,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "librotor", version, about = "Simulate and analyze cavity-cooled nanorotor librations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ratio,
    Diffcal,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize heterodyne spectra for every configured channel and detuning.
    #[command(version)]
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `synthesis.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sideband thermometry on individual traces.
    #[command(version)]
    Analyze {
        /// Glob of PSD CSV files; each needs a `.meta.json` sidecar.
        #[arg(long)]
        traces: String,
        #[arg(long, requires = "dark")]
        shot: Option<PathBuf>,
        #[arg(long, requires = "shot")]
        dark: Option<PathBuf>,
        /// Particle-free reference spectra, matched to traces by channel.
        #[arg(long)]
        background: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "ratio")]
        method: MethodArg,
        /// Known area scale for `diffcal`; calibrated across the traces otherwise.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, requires = "c", default_value_t = 0.0)]
        c_err: f64,
        /// Mechanical frequency used to locate the sidebands; strongest peak otherwise.
        #[arg(long)]
        omega_hint_hz: Option<f64>,
    },
    /// Fit linewidth, frequency and occupation across a detuning scan.
    #[command(version)]
    Scanfit {
        /// Directory written by `simulate` (or laid out the same way).
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run configuration; defaults to the snapshot in `<traces>/run.json`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Classify particle geometry from damping-rate ratios.
    #[command(version)]
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs one command; warnings go to stderr.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out, seed } => simulate::run(&config, &out, seed),
        Command::Analyze { traces, shot, dark, background, out, method, c, c_err, omega_hint_hz } => {
            analyze::run(analyze::Args {
                pattern: traces,
                calibration: shot.zip(dark),
                background,
                out,
                method,
                c: c.map(|value| librotor::thermometry::CFactor { value, err: c_err }),
                omega_hint_hz,
            })
        }
        Command::Scanfit { traces, out, config } => scanfit::run(&traces, &out, config.as_deref()),
        Command::Classify { input, out } => classify::run(&input, &out),
    }
}

pub(crate) fn warn(msg: impl AsRef<str>) {
    eprintln!("warning: {}", msg.as_ref());
}
