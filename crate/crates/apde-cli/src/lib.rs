//! Library surface of the command-line driver.
//!
//! The binary in `main.rs` is a thin shell over [`commands::run`]; keeping
//! the argument definitions, subcommand implementations, and the SVG plot
//! renderer here lets integration tests drive them directly and parse the
//! plots back.

pub mod commands;
pub mod plot;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "apde",
    about = "Learn joint coefficient/solution distributions from partial observations",
    version
)]
pub struct Cli {
    /// Experiment configuration file (key = value lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override every *.seed key in the config with this value.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for data-parallel sections (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Directory for datasets, checkpoints, reports, and plots.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Synthesize train/test pair datasets and audit them.
    Generate,
    /// Train a model on the generated training set.
    Train,
    /// Evaluate a trained checkpoint on the test set across step counts.
    Evaluate,
    /// Draw conditional samples for test cases and report agreement.
    Sample,
    /// Train one model per withheld-point count and tabulate errors.
    Sweep,
    /// Super-resolution protocol: lattice observations plus extra masking.
    Superres,
}

/// Distinct nonzero exit codes per failure class.
pub fn exit_code(e: &apde::Error) -> u8 {
    match e {
        apde::Error::Config(_) => 2,
        apde::Error::Numeric(_) => 3,
        apde::Error::Io(_) | apde::Error::Format { .. } => 4,
    }
}
