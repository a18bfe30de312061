use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = landau_cli::Cli::parse();
    match landau_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("landau: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
