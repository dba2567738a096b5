//! Experiment runner: parses flags and the JSON config, runs one command and
//! writes its tables, reports and resolved configuration.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::Parser;

use crate::commands::{run_command, write_resolved_config, Ctx};
use crate::config::{Command, Overrides, RunConfig};
use crate::output::emit_reports;

/// Every report passed (or was informational).
pub const EXIT_OK: u8 = 0;
/// Bad configuration, parameters or I/O.
pub const EXIT_ERROR: u8 = 1;
/// The run completed but some report failed.
pub const EXIT_FAILED_REPORTS: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "norminflate", version, about = "Norm-inflation experiments for the 3D Boussinesq system")]
pub struct Cli {
    /// Command to run; falls back to `command` in the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set params.r=8`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also write SVG charts.
    #[arg(long)]
    pub plot: bool,
    /// Omit wall-clock data so repeated runs give identical files.
    #[arg(long)]
    pub deterministic: bool,
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            command: self.command,
            sets: self.sets.clone(),
            jobs: self.jobs,
            plot: self.plot,
            deterministic: self.deterministic,
        }
    }
}

/// Summary of a finished run.
#[derive(Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub failures: usize,
}

/// Runs a validated configuration.
pub fn run(mut cfg: RunConfig) -> Result<RunSummary> {
    let dir = cfg.resolve_output_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let command = cfg.command.context("no command")?;
    let mut comments = vec![format!("norminflate {} seed={}", command.name(), cfg.seed)];
    if !cfg.deterministic {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        comments.push(format!("unix_time={secs}"));
    }
    let ctx = Ctx {
        cfg: &cfg,
        dir: dir.clone(),
        comments,
    };
    let mut outcome = run_command(&ctx)?;
    for rep in &outcome.reports {
        println!("{rep}");
    }
    let reports = dir.join("reports.csv");
    emit_reports(&outcome.reports, &reports, &ctx.comments)?;
    outcome.files.push(reports);
    let resolved = dir.join("resolved_config.json");
    write_resolved_config(&cfg, &resolved)?;
    outcome.files.push(resolved);
    let failures = outcome.reports.iter().filter(|r| r.is_failure()).count();
    Ok(RunSummary {
        output_dir: dir,
        files: outcome.files,
        failures,
    })
}

/// Full command line handling; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let result = config::load(cli.config.as_deref(), &cli.overrides()).and_then(|cfg| {
        if let Some(jobs) = cfg.jobs {
            // Fails only when a pool already exists, e.g. on a second call in-process.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
        }
        run(cfg)
    });
    match result {
        Ok(summary) => {
            println!("wrote {} files to {}", summary.files.len(), summary.output_dir.display());
            if summary.failures > 0 {
                println!("{} failing report(s)", summary.failures);
                EXIT_FAILED_REPORTS
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}
