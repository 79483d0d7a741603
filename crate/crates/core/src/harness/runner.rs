//! Execute a [`RunConfig`]: one metrics file and one summary per seed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::dist_runtime::{run_baseline, run_distributed_observed, DistEvent};
use crate::dual_loop::run_chain_observed;
use crate::error::Result;
use crate::metrics::{should_record, MetricsRecord};
use crate::param::ParamVec;
use crate::rng::SeedStreams;

use super::config::{Algorithm, RunConfig};
use super::output::{write_metrics_file, RunSummary};

#[derive(Debug, Clone, Serialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
    pub summary: RunSummary,
}

pub fn csv_path(dir: &Path, name: &str, seed: u64) -> PathBuf {
    dir.join(format!("{name}-seed{seed}.csv"))
}

pub fn summary_path(dir: &Path, name: &str, seed: u64) -> PathBuf {
    dir.join(format!("{name}-seed{seed}.summary.json"))
}

/// Worker starting points: `x0` plus seeded uniform jitter of half-width
/// `spread` (none when `spread = 0`).
pub fn worker_starts(x0: &ParamVec, n: usize, spread: f64, seed: u64) -> Vec<ParamVec> {
    let streams = SeedStreams::new(seed);
    (0..n)
        .map(|i| {
            let mut x = x0.clone();
            if spread > 0.0 {
                let mut rng = streams.rng("init", i as u64);
                for v in x.as_mut_slice() {
                    *v += rng.random_range(-spread..spread);
                }
            }
            x
        })
        .collect()
}

/// Run one seed, appending kept rows to `rows` as they are produced so that
/// a failed run still leaves every row up to the failure.
pub fn run_seed(cfg: &RunConfig, seed: u64, rows: &mut Vec<MetricsRecord>) -> Result<()> {
    cfg.validate()?;
    let obj = cfg.objective()?;
    let dim = obj.dim();
    let x0 = cfg.initial_point(dim)?;
    let start = Instant::now();
    match cfg.algorithm {
        Algorithm::Esgd | Algorithm::LsamChain => {
            let sam = cfg.sam_params(cfg.schedule.rho0, dim)?;
            run_chain_observed(
                obj.as_ref(),
                &cfg.schedule,
                &sam,
                x0.clone(),
                x0,
                cfg.horizon,
                seed,
                |d, _| {
                    if should_record(d.t, false) {
                        let wall = if cfg.wall_clock {
                            start.elapsed().as_nanos() as u64
                        } else {
                            0
                        };
                        rows.push(d.to_record(wall, false, -1));
                    }
                },
            )?;
        }
        Algorithm::Lsam => {
            let dc = cfg.dist_config(dim)?;
            let x0s = worker_starts(&x0, dc.n_workers, cfg.init_spread, seed);
            run_distributed_observed(obj.as_ref(), &dc, &x0s, &x0, cfg.horizon, seed, |ev| {
                if let DistEvent::Record(r) = ev {
                    rows.push(*r);
                }
            })?;
        }
        a => {
            let algo = a.baseline().expect("remaining algorithms are baselines");
            let bc = cfg.baseline_config(algo, dim)?;
            let n = match algo {
                crate::dist_runtime::BaselineAlgo::DpSgd | crate::dist_runtime::BaselineAlgo::DpSam => 1,
                _ => bc.n_workers,
            };
            let x0s = worker_starts(&x0, n, cfg.init_spread, seed);
            rows.extend(run_baseline(obj.as_ref(), algo, &bc, &x0s, cfg.horizon, seed)?.records);
        }
    }
    Ok(())
}

/// Run every seed of `cfg`, writing `<output_path>/<name>-seed<k>.csv` and
/// the matching summary. On failure the rows produced so far are written
/// before the error is returned.
pub fn execute(cfg: &RunConfig) -> Result<Vec<SeedOutcome>> {
    cfg.validate()?;
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir)?;
    let mut out = Vec::new();
    for &seed in &cfg.seeds {
        let mut rows = Vec::new();
        let result = run_seed(cfg, seed, &mut rows);
        let csv = csv_path(&dir, &cfg.name, seed);
        let sum_path = summary_path(&dir, &cfg.name, seed);
        write_metrics_file(&csv, &rows)?;
        let summary = RunSummary::from_records(&format!("{}-seed{seed}", cfg.name), &rows);
        summary.write(&sum_path)?;
        result?;
        out.push(SeedOutcome {
            seed,
            csv_path: csv,
            summary_path: sum_path,
            summary,
        });
    }
    Ok(out)
}
