//! `dipnet`: train, evaluate and probe dipole-moment models.
//!
//! Exit status is 0 on success, 1 when a property check or training run
//! fails, and 2 for usage, configuration and I/O errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// An error with the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<dipnet::Error> for CliError {
    fn from(e: dipnet::Error) -> Self {
        use dipnet::Error as E;
        match e {
            E::Io { .. }
            | E::File { .. }
            | E::Parse { .. }
            | E::UnknownElement(_)
            | E::UnknownSpecies(_)
            | E::Checkpoint(_)
            | E::Config(_) => CliError::usage(e.to_string()),
            _ => CliError::failure(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "dipnet", version, about = "Dipole-moment prediction with direction-invariant edge embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by the commands that build a configuration.
#[derive(Args, Debug, Default)]
pub struct Overrides {
    /// Config file (`key = value` lines under `[run]`, `[model]`, `[train]`, `[data]`, `[check]`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// paper_literal, strict_equivariant, nonsym_edge or node_charge.
    #[arg(long)]
    pub variant: Option<String>,
    /// silu, mish, shifted-softplus or bent-identity.
    #[arg(long)]
    pub activation: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Train on the first N molecules of the shuffled training split.
    #[arg(long, value_name = "N")]
    pub subset: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model; writes checkpoint.json, history.csv, metrics.json and predictions.csv.
    Train {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Evaluate a checkpoint on every molecule of a directory and print metrics JSON.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data_dir: PathBuf,
        /// Also write metrics.json and predictions.csv here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Predict the dipole of one XYZ file.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        xyz: PathBuf,
    },
    /// Predicted dipole norm of acenes with 1..=N rings, as CSV.
    BenzeneScan {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_name = "N")]
        n_max: usize,
        /// Write benzene_scan.csv here instead of printing.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the invariance and gradient property suite.
    Check {
        #[command(flatten)]
        overrides: Overrides,
        /// Also check the acene null on this checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Draw the test molecules from this directory instead of generating them.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train {
            overrides,
            data_dir,
            out_dir,
        } => commands::train(&overrides, &data_dir, &out_dir),
        Command::Eval {
            checkpoint,
            data_dir,
            out_dir,
        } => commands::eval(&checkpoint, &data_dir, out_dir.as_deref()),
        Command::Predict { checkpoint, xyz } => commands::predict(&checkpoint, &xyz),
        Command::BenzeneScan {
            checkpoint,
            n_max,
            out_dir,
        } => commands::benzene_scan(&checkpoint, n_max, out_dir.as_deref()),
        Command::Check {
            overrides,
            checkpoint,
            data_dir,
        } => commands::check(&overrides, checkpoint.as_deref(), data_dir.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
