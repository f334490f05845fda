mod commands;
mod config;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use commands::{cmd_basis, cmd_convergence, cmd_solve, cmd_verify, CliError, Output};
use config::{Cli, Command, RunConfig};

fn run(cli: Cli) -> Result<bool, CliError> {
    let config = RunConfig::resolve(cli.command, cli.flags).map_err(CliError::Config)?;
    if let Some(t) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {t} threads: {e}")))?;
    }
    let out = match config.command {
        Command::Verify => cmd_verify(&config)?,
        Command::Convergence => cmd_convergence(&config)?,
        Command::Solve => cmd_solve(&config)?,
        Command::Basis => cmd_basis(&config)?,
    };
    emit(&out, config.output.as_deref())?;
    Ok(out.pass)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Body to `--output` (summary then on stdout) or to stdout (summary on stderr).
fn emit(out: &Output, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(path) => {
            write_file(path, &out.body)?;
            if let Some(manifest) = &out.manifest {
                write_file(&path.with_extension("json"), manifest)?;
            }
            for line in &out.summary {
                println!("{line}");
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.body.as_bytes())
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            for line in &out.summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
