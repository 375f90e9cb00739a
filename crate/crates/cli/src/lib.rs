//! Command-line front end: CSV ingestion, run configuration, dispatch to the
//! library pipelines and plot-ready CSV output.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use crate::config::{Cli, RunConfig};
use crate::error::{CliError, CliResult};

/// Resolves, executes and writes one run.
pub fn run(cfg: &RunConfig) -> CliResult<String> {
    let outcome = commands::execute(cfg)?;
    let mut to_disk = Vec::new();
    let mut to_stdout = Vec::new();
    for (dest, contents) in outcome.files {
        match dest {
            Some(p) => to_disk.push((p, contents)),
            None => to_stdout.push(contents),
        }
    }
    if let Some((first, _)) = to_disk.first() {
        if cfg.command == config::CommandKind::BayesCompare {
            if let Some(dir) = first.parent() {
                std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
            }
        }
    }
    output::write_all_atomic(&to_disk)?;
    let mut out = std::io::stdout().lock();
    for contents in to_stdout {
        out.write_all(&contents)
            .and_then(|_| out.flush())
            .map_err(|e| CliError::Data(format!("stdout: {e}")))?;
    }
    Ok(outcome.summary)
}

/// Entry point shared by the binary and tests; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (kind, flags) = cli.command.parts();
    let result = RunConfig::resolve(kind, flags).and_then(|cfg| {
        let summary = run(&cfg)?;
        // the table itself owns stdout when no --out was given
        if cfg.out.is_some() {
            println!("{summary}");
        } else {
            eprintln!("{summary}");
        }
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("conformal: {e}");
            e.exit_code()
        }
    }
}
