//! Command-line front end for the `oligodyn` solvers.
//!
//! [`run`] parses arguments, resolves the flat configuration, dispatches one
//! subcommand and maps every failure onto a documented exit code.

mod commands;
pub mod config;
mod output;

use std::ffi::OsString;

use clap::error::ErrorKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_BRACKETING: i32 = 4;
pub const EXIT_IO: i32 = 5;

pub const THREADS_ENV: &str = "OLIGODYN_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Convergence(String),
    #[error("{0}")]
    Bracketing(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Convergence(_) => EXIT_CONVERGENCE,
            CliError::Bracketing(_) => EXIT_BRACKETING,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<oligodyn::Error> for CliError {
    fn from(e: oligodyn::Error) -> Self {
        let msg = e.to_string();
        if e.is_invalid_input() {
            CliError::Invalid(msg)
        } else if e.is_bracketing_failure() {
            CliError::Bracketing(msg)
        } else {
            CliError::Convergence(msg)
        }
    }
}

/// Runs one invocation and returns its exit code. Errors are reported on
/// stderr as a single line starting with `error:`.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match config::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_OK
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    eprint!("{e}");
                    EXIT_INVALID
                }
                _ => {
                    let text = e.to_string();
                    let first = text.lines().next().unwrap_or("invalid arguments");
                    eprintln!("error: {}", first.trim_start_matches("error: "));
                    EXIT_INVALID
                }
            };
        }
    };
    match dispatch(&matches) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}

fn dispatch(matches: &clap::ArgMatches) -> Result<(), CliError> {
    let (name, sub_matches) = matches
        .subcommand()
        .ok_or_else(|| CliError::Invalid("missing subcommand".into()))?;
    let sub = config::subcommands()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| CliError::Invalid(format!("unknown subcommand `{name}`")))?;
    let resolved = config::resolve(&sub, sub_matches)?;
    configure_threads()?;
    commands::execute(&resolved)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Invalid(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    // A second call in the same process (tests) finds the pool already built.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}
