mod cli;
mod commands;
mod config;
mod inputs;

use std::process::ExitCode;

use clap::Parser;

use crate::cli::Cli;
use crate::commands::{Failure, Status};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_INDETERMINATE: u8 = 4;

/// Caps rayon's pool at `BELTRAMI_THREADS` workers.
fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("BELTRAMI_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        anyhow::anyhow!("BELTRAMI_THREADS must be a positive integer, got `{v}`")
    })?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let args = match config::merge(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_CONFIG);
    }
    match commands::run(cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Indeterminate) => ExitCode::from(EXIT_INDETERMINATE),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
