use std::process::ExitCode;

use clap::Parser;
use rdmft_cli::{run, Cli, Status};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::ConfigError.code() } else { 0 });
        }
    };
    let status = run(&cli.command).unwrap_or_else(|e| {
        eprintln!("rdmft: {e}");
        Status::of_error(&e)
    });
    ExitCode::from(status.code())
}
