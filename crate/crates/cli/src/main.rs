use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use hierank_cli::{run, Cli, CliError, Outcome};

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Invalid(format!("--threads {n}: {e}")))?
            .install(|| run(cli)),
        None => run(cli),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match execute(&cli) {
        Ok(outcome) => outcome,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &outcome.text).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout()
            .write_all(outcome.text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    };
    if let Err(err) = written {
        eprintln!("error: {err}");
        return ExitCode::from(err.exit_code() as u8);
    }
    ExitCode::from(outcome.exit_code as u8)
}
