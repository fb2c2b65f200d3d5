//! Command-line driver: configuration, orchestration and output schemas.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 oracle-gate failure, 4 resource budget exceeded.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod fuzzing;
pub mod io;

use std::path::PathBuf;

use args::Action;
pub use config::RunConfig;
pub use error::CliError;

pub fn execute(action: Action, cfg: &RunConfig) -> Result<commands::Output, CliError> {
    match action {
        Action::Walk => commands::walk(cfg),
        Action::Constants => commands::constants(cfg),
        Action::Schedule => commands::schedule(cfg),
        Action::Average { inject_fault } => commands::average(cfg, inject_fault),
        Action::Ratio => commands::ratio(cfg),
        Action::EntropyProxy => commands::entropy_proxy(cfg),
        Action::Ergodicity => commands::ergodicity(cfg),
    }
}

fn sibling(path: &std::path::Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// Writes the outputs to `--out` (or stdout) and maps the gate verdict to an error.
pub fn emit(cfg: &RunConfig, output: commands::Output) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, &output.primary)?;
            if let Some((suffix, text)) = &output.secondary {
                std::fs::write(sibling(path, suffix), text)?;
            }
        }
        None => {
            print!("{}", output.primary);
            if let Some((_, text)) = &output.secondary {
                print!("{text}");
            }
        }
    }
    match output.gate_failure {
        Some(msg) => Err(CliError::Gate(msg)),
        None => Ok(()),
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: args::Cli) -> i32 {
    let outcome = cli
        .command
        .resolve()
        .and_then(|(action, cfg)| emit(&cfg, execute(action, &cfg)?));
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cocycle: {e}");
            e.exit_code()
        }
    }
}
