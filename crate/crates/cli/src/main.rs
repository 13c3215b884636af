//! `swcoding`: command-line front end for finite-blocklength Slepian-Wolf
//! analysis. Data goes to stdout (or `--out`), diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 input or other failure, 2 usage error, 3
//! enumeration budget exceeded, 4 theorem hypothesis violated.

mod args;
mod commands;
mod output;

use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(output::exit_code(&err))
        }
    }
}
