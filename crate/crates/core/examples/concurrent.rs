//! Workers on OS threads exchanging messages with the center; prints the
//! message accounting of each run.

use lsam::dist_runtime::{run_distributed, DistConfig, Scheduler};
use lsam::landscapes::make_quadratic;
use lsam::sam_map::SamParams;
use lsam::{ParamVec, Result};

fn main() -> Result<()> {
    let quad = make_quadratic(2, ParamVec::from([1.0, 0.5]), 0.5)?;
    for (n, tau) in [(2, 4), (4, 8), (6, 2)] {
        let mut cfg = DistConfig::new(n, tau, 0.05, 0.5, SamParams::new(0.05, 1e-8)?);
        cfg.eta_outer = 0.2;
        cfg.scheduler = Scheduler::RealConcurrent;
        let x0s = vec![ParamVec::from([1.0, 1.0]); n];
        let run = run_distributed(&quad, &cfg, &x0s, &ParamVec::from([1.0, 1.0]), 50, 3)?;
        let rep = run.concurrency.expect("real-concurrent runs carry a report");
        println!(
            "n {n} tau {tau}: syncs {}, requests {}, responses {}, max view lag {}, conserved = {}",
            rep.syncs,
            rep.requests,
            rep.responses,
            rep.max_view_lag,
            rep.conserved()
        );
    }
    Ok(())
}
