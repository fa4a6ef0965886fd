//! The `ia-tails` command-line tool.
//!
//! Every command that writes a file also writes `<out>.manifest.json` with
//! the resolved options, the seed and a SHA-256 digest of the output.
//! Exit codes: 0 success, 2 bad usage or input, 3 numerical failure, 4 I/O.
//! `IA_TAILS_THREADS` caps the worker pool.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command, ModelCommand};
use crate::error::{CliError, CliResult};

pub const THREADS_ENV: &str = "IA_TAILS_THREADS";

fn init_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    // A pool built earlier in this process is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    init_threads()?;
    let pretty = cli.pretty;
    match &cli.command {
        Command::Sample(a) => commands::sample(a, pretty),
        Command::Fit(a) => commands::fit_cmd(a, pretty),
        Command::McStudy(a) => commands::mc_study(a, pretty),
        Command::Model(ModelCommand::Cnm(a)) => commands::cnm(a, pretty),
        Command::Model(ModelCommand::Stdmap(a)) => commands::stdmap(a, pretty),
        Command::Plotdata(a) => commands::plotdata(a, pretty),
    }
}

/// Parse `args`, run the command and map the outcome to an exit code.
pub fn main_with_args<I: IntoIterator<Item = OsString>>(args: I) -> ExitCode {
    let fail = |e: CliError| {
        eprintln!("error: {e}");
        ExitCode::from(e.exit_code())
    };
    let args = match config::expand(args.into_iter().collect()) {
        Ok(a) => a,
        Err(e) => return fail(e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
