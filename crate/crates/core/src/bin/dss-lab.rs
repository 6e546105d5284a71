use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use dss_core::cli::{execute, render_error, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (body, code) = match execute(&cli) {
        Ok(outcome) => (outcome.body, outcome.code),
        Err(err) => {
            let (machine, human, code) = render_error(&err, cli.format);
            eprintln!("{human}");
            (machine, code)
        }
    };
    let written = match &cli.output {
        Some(path) if code == 0 || code == 3 => std::fs::write(path, &body),
        _ => std::io::stdout().write_all(body.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code as u8)
}
