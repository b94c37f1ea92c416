mod args;
mod manifest;
mod run;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use manifest::RunManifest;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] polyconfig::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(polyconfig::Error::Budget(_)) => 3,
            CliError::Usage(_) | CliError::Core(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("usage: polyconfig [OPTIONS] <COMMAND> (see --help)");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let started = manifest::now_ms();
    let cli = match cli.global.manifest.clone() {
        Some(path) => replay(cli, &path)?,
        None => cli,
    };
    let out = cli.global.out.clone();
    let resolved = run::resolve(cli)?;
    let artifacts = run::execute(&resolved)?;
    match out {
        Some(dir) => {
            run::write_artifacts(&dir, &artifacts)?;
            RunManifest::new(resolved, started, &artifacts).write(&dir)?;
        }
        None => {
            let shown: Vec<&str> = artifacts
                .iter()
                .filter(|a| a.stdout)
                .map(|a| a.content.as_str())
                .collect();
            print!("{}", shown.join("\n"));
        }
    }
    Ok(())
}

/// The recorded invocation, with `--out` and `--parallelism` taken from the
/// command line since neither affects the data.
fn replay(cli: Cli, path: &std::path::Path) -> Result<Cli, CliError> {
    if cli.command.is_some() {
        return Err(CliError::Usage(
            "--manifest replays a recorded run and takes no subcommand".into(),
        ));
    }
    let mut recorded = RunManifest::load(path)?.invocation;
    recorded.global.out = cli.global.out;
    if cli.global.parallelism.is_some() {
        recorded.global.parallelism = cli.global.parallelism;
    }
    Ok(recorded)
}
