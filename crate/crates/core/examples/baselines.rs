//! Data-parallel SGD and SAM, EASGD and LSGD on the same quadratic.

use lsam::dist_runtime::{run_baseline, BaselineAlgo, BaselineConfig};
use lsam::landscapes::{make_quadratic, Objective};
use lsam::sam_map::SamParams;
use lsam::{ParamVec, Result};

fn main() -> Result<()> {
    let quad = make_quadratic(2, ParamVec::from([1.0, 0.5]), 0.5)?;
    for algo in [
        BaselineAlgo::DpSgd,
        BaselineAlgo::DpSam,
        BaselineAlgo::Easgd,
        BaselineAlgo::Lsgd,
    ] {
        let (n, tau) = match algo {
            BaselineAlgo::DpSgd | BaselineAlgo::DpSam => (1, 1),
            _ => (4, 4),
        };
        let mut cfg = BaselineConfig::new(n, tau, 0.1, 2);
        if algo == BaselineAlgo::DpSam {
            cfg.sam = SamParams::new(0.05, 1e-8)?;
        }
        let x0s = vec![ParamVec::from([2.0, -2.0]); n];
        let run = run_baseline(&quad, algo, &cfg, &x0s, 5_000, 1)?;
        println!(
            "{algo:?}: center f = {:.3e}, rows = {}, workers = {}",
            quad.eval(&run.center),
            run.records.len(),
            run.workers.len()
        );
    }
    Ok(())
}
