//! Command-line driver for the ambient flow-matching pipeline.
//!
//! Every subcommand reads one flat key=value config file, derives a short
//! content hash from it, and embeds that hash in the name of every artifact
//! it writes, so outputs from different configurations can never collide.
//! Exit codes distinguish failure classes: 2 for configuration errors, 3
//! for numeric failures, 4 for I/O and file-format problems.

use std::process::ExitCode;

use clap::Parser;

use apde_cli::{commands, exit_code, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    apde::par::configure_threads(cli.threads);
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
