use std::time::Instant;

use rand::Rng;

use crate::error::{Error, Result};
use crate::landscapes::Objective;
use crate::metrics::{should_record, MetricsRecord};
use crate::param::ParamVec;
use crate::rng::SeedStreams;

use super::concurrent::{self, ConcurrencyReport};
use super::{
    center_update, sync_row, worker_row, worker_step_with, CenterState, DistConfig, ProtocolMonitor, Scheduler,
    SyncEvent, WorkerState,
};

/// Hook into a run as it progresses.
#[derive(Debug)]
pub enum DistEvent<'a> {
    WorkerStep {
        tick: u64,
        worker: &'a WorkerState,
        y_view: &'a ParamVec,
    },
    Sync {
        tick: u64,
        event: &'a SyncEvent,
        center: &'a CenterState,
    },
    /// A metrics row was kept.
    Record(&'a MetricsRecord),
}

#[derive(Debug, Clone)]
pub struct DistRun {
    pub records: Vec<MetricsRecord>,
    pub syncs: Vec<SyncEvent>,
    pub center: CenterState,
    pub workers: Vec<WorkerState>,
    /// Only for the real-concurrent scheduler.
    pub concurrency: Option<ConcurrencyReport>,
}

/// Run until the center has taken `total_outer_steps` steps.
pub fn run_distributed(
    obj: &dyn Objective,
    cfg: &DistConfig,
    x0s: &[ParamVec],
    y0: &ParamVec,
    total_outer_steps: u64,
    seed: u64,
) -> Result<DistRun> {
    run_distributed_observed(obj, cfg, x0s, y0, total_outer_steps, seed, |_| {})
}

/// As [`run_distributed`], calling `observer` after every worker step and
/// every sync, and with every kept metrics row. The real-concurrent
/// scheduler reports syncs and rows only.
pub fn run_distributed_observed<F>(
    obj: &dyn Objective,
    cfg: &DistConfig,
    x0s: &[ParamVec],
    y0: &ParamVec,
    total_outer_steps: u64,
    seed: u64,
    mut observer: F,
) -> Result<DistRun>
where
    F: FnMut(DistEvent<'_>),
{
    cfg.validate()?;
    if x0s.len() != cfg.n_workers {
        return Err(Error::Config(format!(
            "{} initial points for {} workers",
            x0s.len(),
            cfg.n_workers
        )));
    }
    Error::check_dim(obj.dim(), y0)?;
    for x in x0s {
        Error::check_dim(obj.dim(), x)?;
    }
    if cfg.scheduler == Scheduler::RealConcurrent {
        return concurrent::run(obj, cfg, x0s, y0, total_outer_steps, seed, &mut observer);
    }

    let streams = SeedStreams::new(seed);
    let kern = cfg.kernel(obj.dim())?;
    let lambda = cfg.lambda();
    let period = cfg.sync_period();
    let n = cfg.n_workers;
    let start = Instant::now();
    let wall = || {
        if cfg.wall_clock {
            start.elapsed().as_nanos() as u64
        } else {
            0
        }
    };

    let mut workers: Vec<WorkerState> = x0s
        .iter()
        .enumerate()
        .map(|(i, x)| WorkerState::new(i, x.clone(), streams.seed("worker", i as u64)))
        .collect();
    let mut views: Vec<ParamVec> = vec![y0.clone(); n];
    let mut view_versions: Vec<u64> = vec![0; n];
    let mut center = CenterState::new(y0.clone());
    let mut monitor = ProtocolMonitor::new(period);
    let mut sched_rng = streams.rng("scheduler", 0);
    let mut records = Vec::new();
    let mut syncs = Vec::new();
    let mut tick: u64 = 0;
    let mut pending: u64 = 0;
    let mut rr: usize = 0;

    while center.t_y < total_outer_steps {
        let i = match cfg.scheduler {
            Scheduler::RoundRobin => {
                let i = rr % n;
                rr += 1;
                i
            }
            _ => sched_rng.random_range(0..n),
        };
        if center.t_y - view_versions[i] > 1 {
            return Err(Error::Protocol(format!(
                "worker {i} view is {} outer steps stale",
                center.t_y - view_versions[i]
            )));
        }
        if cfg.record_metrics && should_record(tick, false) {
            records.push(worker_row(obj, lambda, &workers[i].x, &views[i], tick, wall(), i));
            observer(DistEvent::Record(records.last().expect("just pushed")));
        }
        let w = std::mem::replace(&mut workers[i], WorkerState::new(i, ParamVec::zeros(0), 0));
        workers[i] = worker_step_with(obj, cfg, &kern, w, &views[i])?;
        observer(DistEvent::WorkerStep {
            tick,
            worker: &workers[i],
            y_view: &views[i],
        });
        tick += 1;
        pending += 1;

        if pending == period {
            let mut sum = ParamVec::zeros(obj.dim());
            for w in &workers {
                sum += &w.sample_sum;
            }
            let counted: u64 = workers.iter().map(|w| w.t_x).sum();
            if counted != period {
                return Err(Error::Protocol(format!(
                    "{counted} samples accumulated, expected {period}"
                )));
            }
            let (next, event) = center_update(cfg, &sum, counted, center);
            center = next;
            for w in workers.iter_mut() {
                w.reset_counters();
            }
            monitor.on_sync(&event)?;
            monitor.check_reset(&workers)?;
            for (v, ver) in views.iter_mut().zip(view_versions.iter_mut()) {
                v.clone_from(&center.y);
                *ver = center.t_y;
            }
            pending = 0;
            if cfg.record_metrics {
                let xbar = mean_position(&workers);
                records.push(sync_row(obj, lambda, &center.y, &xbar, tick, wall()));
                observer(DistEvent::Record(records.last().expect("just pushed")));
            }
            observer(DistEvent::Sync {
                tick,
                event: &event,
                center: &center,
            });
            syncs.push(event);
            tick += 1;
        }
    }

    Ok(DistRun {
        records,
        syncs,
        center,
        workers,
        concurrency: None,
    })
}

pub(crate) fn mean_position(workers: &[WorkerState]) -> ParamVec {
    let mut m = ParamVec::zeros(workers[0].x.len());
    for w in workers {
        m += &w.x;
    }
    m.scaled(1.0 / workers.len() as f64)
}
