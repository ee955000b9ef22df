//! Command-line front end for the `duality-core` models: sweeps, fringe
//! scans, photon-counting estimates, fits and figure presets.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod presets;
pub mod resolve;
pub mod selftest;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::{Cli, Command};
pub use error::CliError;
pub use manifest::RunManifest;

/// Runs the CLI against the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Parses `argv` (including the program name), executes the command and
/// returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    let mut io = commands::Io { out, err };
    match commands::dispatch(cli.command, &mut io) {
        Ok(()) => {
            let _ = io.out.flush();
            0
        }
        Err(e) => {
            let _ = io.out.flush();
            let _ = writeln!(io.err, "{e}");
            e.exit_code()
        }
    }
}
