use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = mfeeg_cli::Cli::parse();
    match mfeeg_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
