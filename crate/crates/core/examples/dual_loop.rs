//! Coupled single chains: plain stochastic gradients, constant radius and
//! decaying radius on the same noisy quadratic.

use lsam::dual_loop::{run_chain, RhoMode, ScheduleSpec};
use lsam::landscapes::{make_quadratic, Objective};
use lsam::sam_map::SamParams;
use lsam::{ParamVec, Result};

fn main() -> Result<()> {
    let quad = make_quadratic(2, ParamVec::from([1.0, 0.5]), 0.1)?;
    let l = quad.smoothness().expect("quadratic has a known L");
    let (lambda, alpha) = (1.0, 0.5);
    let x0 = ParamVec::from([2.0, -2.0]);
    let runs = [
        ("plain", ScheduleSpec::esgd(1.0 / (l + lambda), lambda, alpha)),
        (
            "constant rho",
            ScheduleSpec::esgd(1.0 / (4.0 * (l + lambda)), lambda, alpha).with_rho(RhoMode::Constant, 0.1),
        ),
        (
            "decaying rho",
            ScheduleSpec::esgd(1.0 / (4.0 * (l + lambda)), lambda, alpha).with_rho(RhoMode::Decaying, 0.5),
        ),
    ];
    for (label, sched) in runs {
        let sam = SamParams::with_default_gamma(sched.rho0, 2)?;
        let run = run_chain(&quad, &sched, &sam, x0.clone(), x0.clone(), 20_000, 1, false)?;
        let s = &run.summary;
        println!(
            "{label:<13} mean |G|^2 = {:.3e}  mean |z|^2 = {:.3e}  final f = {:.3e}  rows kept = {}",
            s.mean_g_norm_sq,
            s.mean_z_norm_sq,
            s.final_diagnostics.f_val,
            run.records.len()
        );
    }
    Ok(())
}
