//! Command line: `run`, `verify` and `sweep`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::dist_runtime::Scheduler;
use crate::error::{Error, Result};

use super::config::RunConfig;
use super::runner::execute;
use super::sweep::{run_sweep, GridSpec};
use super::verify::{Suite, Verifier, VerifyOptions};

#[derive(Debug, Parser)]
#[command(
    name = "lsam",
    version,
    about = "Landscape-smoothed SAM experiments and verification suites"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute a run configuration: one metrics CSV and summary per seed.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, replacing `output_path`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run this single seed instead of the configured list.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Scheduler of the distributed runtime.
        #[arg(long)]
        scheduler: Option<Scheduler>,
    },
    /// Run a verification suite and print one line per criterion.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Write the full report as JSON into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed_override: Option<u64>,
        /// Shrunken experiments for a fast smoke run; not the acceptance protocol.
        #[arg(long)]
        quick: bool,
    },
    /// Run the Cartesian product of a grid over a base configuration.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Grid file; without it only the base configuration runs.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed_override: Option<u64>,
        #[arg(long)]
        scheduler: Option<Scheduler>,
    },
}

fn load_config(
    path: &Path,
    out: &Option<PathBuf>,
    seed: Option<u64>,
    scheduler: Option<Scheduler>,
) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(o) = out {
        cfg.output_path = o.display().to_string();
    }
    if let Some(s) = seed {
        cfg.override_seed(s);
    }
    if let Some(s) = scheduler {
        cfg.override_scheduler(s)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<bool> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed_override,
            scheduler,
        } => {
            let cfg = load_config(&config, &out, seed_override, scheduler)?;
            for o in execute(&cfg)? {
                writeln!(
                    stdout,
                    "seed {}: {} rows -> {} ({})",
                    o.seed,
                    o.summary.rows,
                    o.csv_path.display(),
                    o.summary_path.display()
                )?;
            }
            Ok(true)
        }
        Command::Verify {
            suite,
            out,
            seed_override,
            quick,
        } => {
            let mut opts = if quick {
                VerifyOptions::quick()
            } else {
                VerifyOptions::default()
            };
            if let Some(s) = seed_override {
                opts = opts.with_seed(s);
            }
            let mut verifier = Verifier::new(opts);
            let mut reports = Vec::new();
            for &id in suite.criteria() {
                let r = verifier.criterion(id)?;
                writeln!(stdout, "{r}")?;
                reports.push(r);
            }
            let passed = reports.iter().all(|r| r.passed);
            writeln!(
                stdout,
                "{}/{} criteria passed",
                reports.iter().filter(|r| r.passed).count(),
                reports.len()
            )?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let path = dir.join("verify_report.json");
                std::fs::write(&path, serde_json::to_string_pretty(&reports)? + "\n")?;
            }
            Ok(passed)
        }
        Command::Sweep {
            config,
            grid,
            out,
            seed_override,
            scheduler,
        } => {
            let cfg = load_config(&config, &out, seed_override, scheduler)?;
            let spec = match grid {
                Some(p) => GridSpec::load(&p)?,
                None => GridSpec::default(),
            };
            let summary = run_sweep(&cfg, &spec)?;
            for r in &summary.rows {
                writeln!(stdout, "{:>3} {:<32} final f = {:.6e}", r.rank, r.name, r.final_f)?;
            }
            Ok(true)
        }
    }
}

/// Parse `args` and run; returns the process exit code. Errors are printed
/// to stderr: 2 for usage or configuration problems, 1 otherwise.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli, stdout) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_)
                | Error::Parse(_)
                | Error::StepCap { .. }
                | Error::UnsupportedAlgorithm(_)
                | Error::GridTooLarge { .. } => 2,
                _ => 1,
            }
        }
    }
}

pub fn main() -> i32 {
    run_cli(std::env::args_os(), &mut std::io::stdout())
}
