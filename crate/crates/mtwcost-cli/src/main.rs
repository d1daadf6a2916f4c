//! `mtwcost`: regularity reports, conjugate grids, divergences, geodesics and t-law sampling.

mod commands;

use clap::Parser;
use commands::{Cli, CliError};
use std::process::ExitCode;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match commands::expand_config(argv) {
        Ok(a) => a,
        Err(e) => return report(e),
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> ExitCode {
    let code = e.exit_code();
    eprintln!("{}", e.record());
    ExitCode::from(code)
}
