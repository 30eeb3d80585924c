use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = tldr_cli::app::Cli::parse();
    match tldr_cli::app::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(tldr_cli::app::exit_code(&err))
        }
    }
}
