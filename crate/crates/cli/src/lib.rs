//! Library behind the `coordlab` binary: argument types, run
//! configuration, executors and sweeps.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
mod figures;
pub mod run;
mod svg;
pub mod sweep;

use std::io::Write;

pub use error::{CliError, CliResult};

use cli::{Cli, Command};

/// Runs a parsed command line, writing progress to `out`.
pub fn dispatch(cli: &Cli, out: &mut impl Write) -> CliResult<()> {
    match &cli.command {
        Command::Bounds(args) => commands::bounds(args, out),
        Command::Hierarchy(args) => commands::hierarchy(args, out).map(drop),
        Command::Simulate(args) => commands::simulate(args, out).map(drop),
        Command::Cascade(args) => commands::cascade(args, out).map(drop),
        Command::Mogd(args) => commands::mogd(args, out).map(drop),
        Command::Figure(args) => commands::figure(args, out).map(drop),
        Command::Sweep(args) => {
            let spec = sweep::resolve(args)?;
            sweep::run(&spec, &args.out, out).map(drop)
        }
    }
}
