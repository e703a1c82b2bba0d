//! Command-line front end for the Allen-Cahn stability laboratory.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;
pub mod reference;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliError;

/// Parses `argv` and runs one command, returning the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return e.exit_code();
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "acstab: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Reproduce { id, run } => commands::reproduce::run(id, &run.resolve()?, stdout, stderr),
        Command::Simulate { initial, run } => commands::simulate::run(&initial, &run.resolve()?, stdout),
        Command::Analyze { what, run } => commands::analyze::run(what, &run.resolve()?, stdout),
        Command::Preimage { target, run } => commands::preimage::run(&target, &run.resolve()?, stdout, stderr),
    }
}
