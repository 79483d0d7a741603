//! Distributed runtime: protocol conformance and equivalence with the
//! single-chain update.

use rand::Rng;
use serde::Serialize;

use crate::dist_runtime::{run_distributed, run_distributed_observed, DistConfig, DistEvent, Scheduler};
use crate::dual_loop::{run_chain_observed, EtaDecay, ScheduleSpec};
use crate::error::Result;
use crate::landscapes::make_quadratic;
use crate::param::ParamVec;
use crate::rng::SeedStreams;
use crate::sam_map::SamParams;

use super::super::output::metrics_csv_bytes;
use super::{IdentityTally, Outcome, VerifyOptions};

pub const EQUIVALENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolCheck {
    pub syncs: usize,
    pub cadence_ok: bool,
    /// Every worker restarts at `t_x = 1` with a one-term sum after a sync,
    /// and its sum always equals an independent recount.
    pub reset_ok: bool,
    /// `g'` equals the recounted mean minus the previous center.
    pub aggregate_ok: bool,
    pub replay_round_robin: bool,
    pub replay_seeded_random: bool,
    pub concurrent_runs: usize,
    pub concurrent_failures: Vec<String>,
}

/// Outer step for the desk experiments: `eta' = 1` with `beta = 0.9`
/// overshoots once the aggregate tracks the center closely.
pub const DESK_ETA_OUTER: f64 = 0.2;

fn protocol_config(scheduler: Scheduler, n: usize, tau: usize) -> DistConfig {
    let mut cfg = DistConfig::new(n, tau, 0.05, 0.5, SamParams::new(0.05, 1e-8).expect("valid"));
    cfg.eta_outer = DESK_ETA_OUTER;
    cfg.scheduler = scheduler;
    cfg
}

fn starts(n: usize, seed: u64) -> Vec<ParamVec> {
    let mut rng = SeedStreams::new(seed).rng("protocol-inits", 0);
    (0..n)
        .map(|_| ParamVec::from([rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]))
        .collect()
}

pub fn protocol_check(opts: &VerifyOptions, tally: &mut IdentityTally) -> Result<ProtocolCheck> {
    let (n, tau, outer) = (4usize, 16usize, 100u64);
    let obj = make_quadratic(2, ParamVec::from([1.0, 0.5]), 0.5)?;
    let cfg = protocol_config(Scheduler::RoundRobin, n, tau);
    let x0s = starts(n, opts.seed);
    let y0 = ParamVec::zeros(2);

    let mut sums: Vec<ParamVec> = vec![ParamVec::zeros(2); n];
    let mut counts = vec![0u64; n];
    let mut fresh = vec![false; n];
    let mut reset_ok = true;
    let mut aggregate_ok = true;
    let mut y_prev = y0.clone();
    let run = run_distributed_observed(&obj, &cfg, &x0s, &y0, outer, opts.seed, |ev| match ev {
        DistEvent::WorkerStep { worker, .. } => {
            let i = worker.id;
            sums[i] += &worker.x;
            counts[i] += 1;
            if fresh[i] && (worker.t_x != 1 || worker.sample_sum != worker.x) {
                reset_ok = false;
            }
            fresh[i] = false;
            if worker.t_x != counts[i] || worker.sample_sum.distance(&sums[i]) > 1e-12 * (1.0 + sums[i].norm()) {
                reset_ok = false;
            }
        }
        DistEvent::Sync { event, center, .. } => {
            let mut total = ParamVec::zeros(2);
            for s in &sums {
                total += s;
            }
            let expect = &total.scaled(1.0 / counts.iter().sum::<u64>() as f64) - &y_prev;
            if expect.distance(&event.g_prime) > 1e-12 * (1.0 + expect.norm()) {
                aggregate_ok = false;
            }
            y_prev = center.y.clone();
            sums.iter_mut().for_each(|s| s.fill(0.0));
            counts.fill(0);
            fresh.fill(true);
        }
        DistEvent::Record(_) => {}
    })?;
    tally.add_records(&run.records, cfg.lambda());
    let period = (n * tau) as u64;
    let cadence_ok = run.syncs.len() as u64 == outer
        && run
            .syncs
            .iter()
            .enumerate()
            .all(|(k, s)| s.worker_iteration_total == period * (k as u64 + 1) && s.t_y == k as u64);

    let replay = |scheduler: Scheduler| -> Result<bool> {
        let c = protocol_config(scheduler, n, tau);
        let a = run_distributed(&obj, &c, &x0s, &y0, outer, opts.seed)?;
        let b = run_distributed(&obj, &c, &x0s, &y0, outer, opts.seed)?;
        Ok(metrics_csv_bytes(&a.records)? == metrics_csv_bytes(&b.records)? && a.syncs == b.syncs)
    };
    let replay_round_robin = replay(Scheduler::RoundRobin)? && {
        let again = run_distributed(&obj, &cfg, &x0s, &y0, outer, opts.seed)?;
        metrics_csv_bytes(&again.records)? == metrics_csv_bytes(&run.records)?
    };
    let replay_seeded_random = replay(Scheduler::SeededRandom)?;

    let mut rng = SeedStreams::new(opts.seed).rng("concurrent-shapes", 0);
    let mut concurrent_failures = Vec::new();
    for k in 0..opts.concurrent_runs {
        let n = rng.random_range(1..=6usize);
        let tau = rng.random_range(1..=8usize);
        let outer = rng.random_range(5..=40u64);
        let seed = rng.random::<u64>();
        let c = protocol_config(Scheduler::RealConcurrent, n, tau);
        let label = format!("run {k} (n={n}, tau={tau}, outer={outer})");
        match run_distributed(&obj, &c, &starts(n, seed), &y0, outer, seed) {
            Ok(r) => {
                let report = r.concurrency.as_ref();
                let conserved = report.is_some_and(|c| c.conserved());
                let cadence = r.syncs.len() as u64 == outer
                    && r.syncs
                        .iter()
                        .enumerate()
                        .all(|(j, s)| s.worker_iteration_total == (n * tau) as u64 * (j as u64 + 1));
                if !conserved || !cadence {
                    concurrent_failures.push(format!("{label}: conserved={conserved} cadence={cadence}"));
                }
                tally.add_records(&r.records, c.lambda());
            }
            Err(e) => concurrent_failures.push(format!("{label}: {e}")),
        }
    }

    Ok(ProtocolCheck {
        syncs: run.syncs.len(),
        cadence_ok,
        reset_ok,
        aggregate_ok,
        replay_round_robin,
        replay_seeded_random,
        concurrent_runs: opts.concurrent_runs,
        concurrent_failures,
    })
}

pub fn protocol_criterion(opts: &VerifyOptions, tally: &mut IdentityTally) -> Result<Outcome> {
    let c = protocol_check(opts, tally)?;
    let passed = c.cadence_ok
        && c.reset_ok
        && c.aggregate_ok
        && c.replay_round_robin
        && c.replay_seeded_random
        && c.concurrent_failures.is_empty();
    Ok(Outcome {
        name: "protocol-conformance",
        passed,
        detail: format!(
            "{} syncs at 64k = {}; resets {}; aggregate {}; replay rr/random {}/{}; concurrent {}/{} clean",
            c.syncs,
            c.cadence_ok,
            c.reset_ok,
            c.aggregate_ok,
            c.replay_round_robin,
            c.replay_seeded_random,
            c.concurrent_runs - c.concurrent_failures.len(),
            c.concurrent_runs
        ),
        measurements: serde_json::to_value(&c)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Equivalence {
    pub steps: u64,
    pub max_x_diff: f64,
    pub max_y_diff: f64,
}

/// Single worker, `tau = 1`, no noise, no momentum, `eta' = alpha`, against
/// the single-chain update with the same `eta0 / sqrt(t + 1)` schedule.
pub fn equivalence_check(steps: u64, tally: &mut IdentityTally) -> Result<Equivalence> {
    let (eta0, lambda, alpha) = (0.2, 1.5, 0.3);
    let obj = make_quadratic(2, ParamVec::from([1.0, 0.5]), 0.0)?;
    let x0 = ParamVec::from([2.0, -1.0]);
    let y0 = ParamVec::from([0.5, 0.5]);

    let sched = ScheduleSpec::esgd(eta0, lambda, alpha);
    let mut chain = Vec::with_capacity(steps as usize);
    run_chain_observed(
        &obj,
        &sched,
        &SamParams::off(2),
        x0.clone(),
        y0.clone(),
        steps,
        7,
        |_, next| {
            chain.push((next.x.clone(), next.y.clone()));
        },
    )?;

    let mut cfg = DistConfig::new(1, 1, eta0, lambda * eta0, SamParams::off(2));
    cfg.beta = 0.0;
    cfg.momentum = 0.0;
    cfg.eta_outer = alpha;
    cfg.temperature = 0.0;
    cfg.inner_decay = EtaDecay::InvSqrt;
    let mut xs = Vec::with_capacity(steps as usize);
    let mut ys = Vec::with_capacity(steps as usize);
    let run = run_distributed_observed(&obj, &cfg, &[x0], &y0, steps, 7, |ev| match ev {
        DistEvent::WorkerStep { worker, .. } => xs.push(worker.x.clone()),
        DistEvent::Sync { center, .. } => ys.push(center.y.clone()),
        DistEvent::Record(_) => {}
    })?;
    tally.add_records(&run.records, cfg.lambda());

    let mut max_x: f64 = if xs.len() == chain.len() && ys.len() == chain.len() {
        0.0
    } else {
        f64::INFINITY
    };
    let mut max_y: f64 = max_x;
    for ((cx, cy), (dx, dy)) in chain.iter().zip(xs.iter().zip(&ys)) {
        max_x = max_x.max(cx.distance(dx));
        max_y = max_y.max(cy.distance(dy));
    }
    Ok(Equivalence {
        steps,
        max_x_diff: max_x,
        max_y_diff: max_y,
    })
}

pub fn equivalence_criterion(tally: &mut IdentityTally) -> Result<Outcome> {
    let e = equivalence_check(10_000, tally)?;
    Ok(Outcome {
        name: "chain-equivalence",
        passed: e.max_x_diff <= EQUIVALENCE_TOL && e.max_y_diff <= EQUIVALENCE_TOL,
        detail: format!(
            "{} steps, max |dx| {:.2e}, max |dy| {:.2e} <= 1e-10",
            e.steps, e.max_x_diff, e.max_y_diff
        ),
        measurements: serde_json::to_value(&e)?,
    })
}
