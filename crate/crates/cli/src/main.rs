//! `logcap` command-line front end.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when a solver fails.

use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod error;
mod output;

use args::{Cli, Command};

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("LOGCAP_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("LOGCAP_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Capacity(a) => commands::capacity(&a),
        Command::Intervals(a) => commands::intervals(&a),
        Command::Cantor(a) => commands::cantor(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::Convergence(a) => commands::convergence(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
