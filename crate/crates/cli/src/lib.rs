//! Command-line front end for the adaptive box-spline filter: graymap I/O,
//! argument handling and the `abf` commands.

pub mod args;
pub mod commands;
pub mod error;
pub mod pgm;

use std::io::Write;

use clap::Parser;

pub use error::{exit, CliError};

/// Parses `argv`, runs the command and returns the process exit status.
/// Results go to `out`, diagnostics to `err`.
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match commands::run(&cli.command, out) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "abf: {e}");
            e.exit_code()
        }
    }
}
