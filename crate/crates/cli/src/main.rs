use std::process::ExitCode;

use clap::Parser;
use detpro_cli::{run, Cli, Outcome};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((Outcome::Success, _)) => ExitCode::SUCCESS,
        Ok((Outcome::Negative(reason), _)) => {
            eprintln!("{reason}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
