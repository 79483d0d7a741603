//! Threaded execution: one thread per worker, the center on the calling
//! thread. The only shared state is message queues.
//!
//! Every worker step ends with a request carrying the new sample and the
//! worker's sequence number, counter and view version. The center consumes
//! requests from a single ordered queue, so counting towards the next sync is
//! serialized there. Each request receives exactly one response: either the
//! latest center (with a flag telling the worker to reset its counters) or a
//! stop signal once the run is over.

use std::sync::mpsc::{self, Receiver, Sender};
use std::thread;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::landscapes::Objective;
use crate::metrics::should_record;
use crate::param::ParamVec;
use crate::rng::SeedStreams;

use super::simulated::{DistEvent, DistRun};
use super::{
    center_update, sync_row, worker_row, worker_step_with, CenterState, DistConfig, ProtocolMonitor, WorkerState,
};

enum Request {
    Sample {
        worker: usize,
        seq: u64,
        t_x: u64,
        view_version: u64,
        x: ParamVec,
    },
    Failed {
        worker: usize,
        error: String,
    },
}

enum Response {
    /// `reset` carries how many of the worker's samples the center has
    /// already counted in the new period (0 or 1).
    Continue {
        y: ParamVec,
        version: u64,
        reset: Option<u64>,
    },
    Stop,
}

/// Message accounting of a real-concurrent run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConcurrencyReport {
    pub requests: u64,
    pub responses: u64,
    pub per_worker_requests: Vec<u64>,
    pub per_worker_responses: Vec<u64>,
    /// Messages left in the request queue after all workers stopped.
    pub residual_requests: u64,
    pub syncs: u64,
    /// Largest observed `t_y - view_version` on arrival.
    pub max_view_lag: u64,
}

impl ConcurrencyReport {
    pub fn conserved(&self) -> bool {
        self.requests == self.responses
            && self.per_worker_requests == self.per_worker_responses
            && self.residual_requests == 0
    }
}

fn worker_loop(
    obj: &dyn Objective,
    cfg: &DistConfig,
    mut w: WorkerState,
    mut y: ParamVec,
    tx: Sender<Request>,
    rx: Receiver<Response>,
) -> WorkerState {
    let kern = match cfg.kernel(obj.dim()) {
        Ok(k) => k,
        Err(e) => {
            let _ = tx.send(Request::Failed {
                worker: w.id,
                error: e.to_string(),
            });
            return w;
        }
    };
    let mut version = 0u64;
    loop {
        w = match worker_step_with(obj, cfg, &kern, w.clone(), &y) {
            Ok(next) => next,
            Err(e) => {
                let _ = tx.send(Request::Failed {
                    worker: w.id,
                    error: e.to_string(),
                });
                return w;
            }
        };
        let sent = tx.send(Request::Sample {
            worker: w.id,
            seq: w.lifetime,
            t_x: w.t_x,
            view_version: version,
            x: w.x.clone(),
        });
        if sent.is_err() {
            return w;
        }
        match rx.recv() {
            Ok(Response::Continue {
                y: ny,
                version: v,
                reset,
            }) => {
                y = ny;
                version = v;
                if let Some(counted) = reset {
                    w.t_x = counted;
                    if counted == 1 {
                        w.sample_sum.clone_from(&w.x);
                    } else {
                        w.sample_sum.fill(0.0);
                    }
                }
            }
            Ok(Response::Stop) | Err(_) => return w,
        }
    }
}

struct Mirror {
    t_x: u64,
    sum: ParamVec,
    next_seq: u64,
    /// Count at the last reset, until the worker learns about the reset.
    reset_from: Option<u64>,
}

pub(crate) fn run<F>(
    obj: &dyn Objective,
    cfg: &DistConfig,
    x0s: &[ParamVec],
    y0: &ParamVec,
    total_outer_steps: u64,
    seed: u64,
    observer: &mut F,
) -> Result<DistRun>
where
    F: FnMut(DistEvent<'_>),
{
    let n = cfg.n_workers;
    let dim = obj.dim();
    let period = cfg.sync_period();
    let lambda = cfg.lambda();
    let streams = SeedStreams::new(seed);
    let start = Instant::now();
    let wall = || {
        if cfg.wall_clock {
            start.elapsed().as_nanos() as u64
        } else {
            0
        }
    };

    let (req_tx, req_rx) = mpsc::channel::<Request>();
    let mut resp_txs = Vec::with_capacity(n);
    let mut resp_rxs = Vec::with_capacity(n);
    for _ in 0..n {
        let (t, r) = mpsc::channel::<Response>();
        resp_txs.push(t);
        resp_rxs.push(Some(r));
    }

    thread::scope(|scope| {
        let handles: Vec<_> = (0..n)
            .map(|i| {
                let tx = req_tx.clone();
                let rx = resp_rxs[i].take().expect("receiver taken once");
                let w = WorkerState::new(i, x0s[i].clone(), streams.seed("worker", i as u64));
                let y = y0.clone();
                scope.spawn(move || worker_loop(obj, cfg, w, y, tx, rx))
            })
            .collect();
        drop(req_tx);

        let mut center = CenterState::new(y0.clone());
        let mut monitor = ProtocolMonitor::new(period);
        let mut mirrors: Vec<Mirror> = (0..n)
            .map(|_| Mirror {
                t_x: 0,
                sum: ParamVec::zeros(dim),
                next_seq: 1,
                reset_from: None,
            })
            .collect();
        let mut report = ConcurrencyReport {
            requests: 0,
            responses: 0,
            per_worker_requests: vec![0; n],
            per_worker_responses: vec![0; n],
            residual_requests: 0,
            syncs: 0,
            max_view_lag: 0,
        };
        let mut records = Vec::new();
        let mut syncs = Vec::new();
        let mut stopped = vec![false; n];
        let mut failure: Option<Error> = None;
        let mut pending: u64 = 0;
        let mut tick: u64 = 0;
        let mut last_x: Vec<ParamVec> = x0s.to_vec();

        while stopped.iter().any(|s| !s) {
            let msg = match req_rx.recv() {
                Ok(m) => m,
                Err(_) => break,
            };
            let (i, seq, t_x, view_version, x) = match msg {
                Request::Sample {
                    worker,
                    seq,
                    t_x,
                    view_version,
                    x,
                } => (worker, seq, t_x, view_version, x),
                Request::Failed { worker, error } => {
                    stopped[worker] = true;
                    failure.get_or_insert(Error::Protocol(format!("worker {worker} failed: {error}")));
                    continue;
                }
            };
            report.requests += 1;
            report.per_worker_requests[i] += 1;

            let finished = center.t_y >= total_outer_steps || failure.is_some();
            if !finished {
                let m = &mut mirrors[i];
                let lag = center.t_y.saturating_sub(view_version);
                report.max_view_lag = report.max_view_lag.max(lag);
                let expected_t_x = match m.reset_from {
                    Some(before) => before + 1,
                    None => m.t_x + 1,
                };
                if seq != m.next_seq || t_x != expected_t_x {
                    failure.get_or_insert(Error::Protocol(format!(
                        "worker {i}: seq {seq} (expected {}), t_x {t_x} (expected {expected_t_x})",
                        m.next_seq
                    )));
                } else {
                    m.next_seq += 1;
                    m.t_x += 1;
                    m.sum += &x;
                    pending += 1;
                    if cfg.record_metrics && should_record(tick, false) {
                        records.push(worker_row(obj, lambda, &x, &center.y, tick, wall(), i));
                        observer(DistEvent::Record(records.last().expect("just pushed")));
                    }
                    tick += 1;
                    last_x[i] = x;
                }
                if failure.is_none() && pending == period {
                    let mut sum = ParamVec::zeros(dim);
                    for m in &mirrors {
                        sum += &m.sum;
                    }
                    let (next, event) = center_update(cfg, &sum, pending, center.clone());
                    center = next;
                    pending = 0;
                    for m in mirrors.iter_mut() {
                        // Keep the first pending reset: the worker has not
                        // reported since, so its local count is still that one.
                        if m.reset_from.is_none() {
                            m.reset_from = Some(m.t_x);
                        }
                        m.t_x = 0;
                        m.sum.fill(0.0);
                    }
                    if let Err(e) = monitor.on_sync(&event) {
                        failure.get_or_insert(e);
                    }
                    if mirrors.iter().any(|m| m.t_x != 0 || m.sum.iter().any(|v| *v != 0.0)) {
                        failure.get_or_insert(Error::Protocol("center mirrors not reset".into()));
                    }
                    if cfg.record_metrics {
                        let mut xbar = ParamVec::zeros(dim);
                        for x in &last_x {
                            xbar += x;
                        }
                        records.push(sync_row(
                            obj,
                            lambda,
                            &center.y,
                            &xbar.scaled(1.0 / n as f64),
                            tick,
                            wall(),
                        ));
                        observer(DistEvent::Record(records.last().expect("just pushed")));
                    }
                    observer(DistEvent::Sync {
                        tick,
                        event: &event,
                        center: &center,
                    });
                    syncs.push(event);
                    report.syncs += 1;
                    tick += 1;
                }
            }

            let done = center.t_y >= total_outer_steps || failure.is_some();
            let response = if done {
                stopped[i] = true;
                Response::Stop
            } else {
                let m = &mut mirrors[i];
                let reset = m.reset_from.take().map(|_| m.t_x);
                Response::Continue {
                    y: center.y.clone(),
                    version: center.t_y,
                    reset,
                }
            };
            if resp_txs[i].send(response).is_ok() {
                report.responses += 1;
                report.per_worker_responses[i] += 1;
            }
        }

        let workers: Vec<WorkerState> = handles
            .into_iter()
            .map(|h| h.join().map_err(|_| Error::Protocol("worker thread panicked".into())))
            .collect::<Result<_>>()?;
        while req_rx.try_recv().is_ok() {
            report.residual_requests += 1;
        }
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(DistRun {
            records,
            syncs,
            center,
            workers,
            concurrency: Some(report),
        })
    })
}
