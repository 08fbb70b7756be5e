mod args;
mod commands;
mod family;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("STATIONARY_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("STATIONARY_THREADS must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_VALIDATION),
            };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    match commands::run(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_VALIDATION })
        }
    }
}
