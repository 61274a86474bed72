use std::process::ExitCode;

use clap::Parser;
use lada::cli::{execute, Cli, THREADS_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        match value.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("lada: cannot configure thread pool: {e}");
                }
            }
            _ => {
                eprintln!("lada: {THREADS_ENV} must be a positive integer, got {value:?}");
                return ExitCode::from(2);
            }
        }
    }
    match execute(cli) {
        Ok(code) => {
            if code != 0 {
                eprintln!("lada: one or more boundary fits failed; see boundaries.csv");
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("lada: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
