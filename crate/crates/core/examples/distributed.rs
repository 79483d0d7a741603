//! Sampling workers around a momentum center under the deterministic
//! schedulers, with a replay check and an observer on sync events.

use lsam::dist_runtime::{run_distributed, run_distributed_observed, DistConfig, DistEvent, Scheduler};
use lsam::landscapes::{make_quadratic, Objective};
use lsam::sam_map::SamParams;
use lsam::{ParamVec, Result};

fn main() -> Result<()> {
    let quad = make_quadratic(2, ParamVec::from([1.0, 0.5]), 0.5)?;
    let mut cfg = DistConfig::new(4, 16, 0.05, 0.5, SamParams::new(0.05, 1e-8)?);
    cfg.eta_outer = 0.2;
    let x0s = vec![ParamVec::from([2.0, -2.0]); cfg.n_workers];
    let y0 = ParamVec::from([2.0, -2.0]);
    println!(
        "lambda = {:.3}, sync every {} worker steps",
        cfg.lambda(),
        cfg.sync_period()
    );

    for scheduler in [Scheduler::RoundRobin, Scheduler::SeededRandom] {
        cfg.scheduler = scheduler;
        let mut first_syncs = Vec::new();
        let run = run_distributed_observed(&quad, &cfg, &x0s, &y0, 100, 7, |ev| {
            if let DistEvent::Sync { event, center, .. } = ev {
                if event.t_y < 3 {
                    first_syncs.push((event.worker_iteration_total, center.y.norm()));
                }
            }
        })?;
        let replay = run_distributed(&quad, &cfg, &x0s, &y0, 100, 7)?;
        println!(
            "{scheduler:?}: {} syncs, final center ({:+.4}, {:+.4}), f = {:.4e}, replay identical = {}",
            run.syncs.len(),
            run.center.y[0],
            run.center.y[1],
            quad.eval(&run.center.y),
            replay.records == run.records
        );
        for (total, norm) in first_syncs {
            println!("    sync at worker total {total:>4}: |y| = {norm:.4}");
        }
    }
    Ok(())
}
