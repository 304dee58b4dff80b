mod args;
mod commands;
mod error;
mod manifest;
mod scenario;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Run;
use error::CliError;

fn write_output(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not worth an error
            let _ = stdout.write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn finish(run: Run, output: Option<&Path>) -> Result<(), CliError> {
    write_output(&run.output, output)?;
    run.manifest.emit(output)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Estimate(a) => finish(commands::estimate(a)?, a.output.as_deref()),
        Command::Km(a) => finish(commands::km(a)?, a.output.as_deref()),
        Command::BootstrapCi(a) => {
            let ci = commands::bootstrap(a)?;
            print!("{}", ci.summary);
            finish(ci.run, a.output.as_deref())
        }
        Command::Simulate(a) => finish(commands::simulate(a)?, a.output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cevi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
