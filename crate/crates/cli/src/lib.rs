//! Command-line plumbing for covergame: JSON game files, CSV reports and the
//! analyze / generate / sweep / search-signaling drivers.

pub mod args;
pub mod commands;
pub mod error;
pub mod gamefile;
pub mod report;

use std::io::Write;

use args::{Cli, Command};
use commands::Common;
use error::CliResult;

/// Runs a parsed command line; rows and files go to `--out` or `stdout`,
/// summaries to `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let common = Common { seed: cli.seed, cap: cli.cap.unwrap_or(covergame::DEFAULT_JOINT_CAP) };
    let output = match &cli.command {
        Command::Generate(a) => {
            let file = commands::generate(a, common)?;
            return emit(cli, stdout, file.to_json().as_bytes());
        }
        Command::Analyze(a) => commands::analyze(a, common)?,
        Command::Sweep(a) => commands::sweep(a, common)?,
        Command::SearchSignaling(a) => commands::search_signaling(a, common)?,
    };
    let mut csv = Vec::new();
    report::write_rows(&mut csv, &output.rows)?;
    emit(cli, stdout, &csv)?;
    stderr.write_all(output.summary.as_bytes())?;
    Ok(())
}

fn emit(cli: &Cli, stdout: &mut dyn Write, bytes: &[u8]) -> CliResult<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}
