//! Sampling workers around a momentum-driven center.
//!
//! Each worker runs Langevin steps on `q(x | y) ∝ exp(-f(T(x)) - k(x, y))`
//! against its latest view of the center `y`. Whenever the total number of
//! worker steps reaches a multiple of `n * tau`, the center averages every
//! sample collected since the previous sync, forms the ascent direction
//! `g' = mean(x) - y`, adds the look-ahead term `beta (g' - g'_prev)` and
//! takes a Nesterov momentum step. Worker counters and sums then reset.
//!
//! The kernel is Gaussian with `s^2 = 1/lambda` and `lambda = lambda0 /
//! (eta * tau)`, so the worker drift contains exactly the `lambda (x - y)`
//! coupling of the single-chain update.

mod baselines;
mod concurrent;
mod simulated;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dual_loop::{EtaDecay, StepDiagnostics};
use crate::error::{Error, Result};
use crate::kernel_smoothing::{gaussian_kernel, KernelSpec, DEFAULT_CONFINEMENT_RADIUS};
use crate::landscapes::Objective;
use crate::metrics::MetricsRecord;
use crate::param::ParamVec;
use crate::rng::SeedStreams;
use crate::sam_map::{sam_stochastic_grad, SamParams};

pub use baselines::{run_baseline, BaselineAlgo, BaselineConfig, BaselineRun};
pub use concurrent::ConcurrencyReport;
pub use simulated::{run_distributed, run_distributed_observed, DistEvent, DistRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheduler {
    #[default]
    RoundRobin,
    SeededRandom,
    RealConcurrent,
}

impl std::str::FromStr for Scheduler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "round-robin" => Ok(Scheduler::RoundRobin),
            "seeded-random" => Ok(Scheduler::SeededRandom),
            "real-concurrent" => Ok(Scheduler::RealConcurrent),
            other => Err(Error::Config(format!(
                "unknown scheduler {other:?}; expected round-robin, seeded-random or real-concurrent"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistConfig {
    pub n_workers: usize,
    pub tau: usize,
    /// Look-ahead coefficient on `g' - g'_prev`.
    pub beta: f64,
    pub eta_inner: f64,
    pub eta_outer: f64,
    pub lambda0: f64,
    /// Nesterov momentum of the center optimizer; `0` gives a plain step.
    pub momentum: f64,
    /// Multiplier on the `sqrt(2 eta)` Langevin noise; `0` is the proximal mode.
    pub temperature: f64,
    /// Decay of the inner step, indexed by each worker's lifetime step count.
    pub inner_decay: EtaDecay,
    pub sam: SamParams,
    pub scheduler: Scheduler,
    pub seed: u64,
    pub confinement_radius: f64,
    /// Compute exact-gradient diagnostics and keep metrics rows.
    pub record_metrics: bool,
    /// Stamp rows with elapsed wall time instead of zero.
    pub wall_clock: bool,
}

impl DistConfig {
    /// Defaults: `eta' = 1`, `beta = 0.9`, momentum `0.9`, unit temperature,
    /// constant inner step, round-robin scheduling.
    pub fn new(n_workers: usize, tau: usize, eta_inner: f64, lambda0: f64, sam: SamParams) -> Self {
        DistConfig {
            n_workers,
            tau,
            beta: 0.9,
            eta_inner,
            eta_outer: 1.0,
            lambda0,
            momentum: 0.9,
            temperature: 1.0,
            inner_decay: EtaDecay::Constant,
            sam,
            scheduler: Scheduler::RoundRobin,
            seed: 0,
            confinement_radius: DEFAULT_CONFINEMENT_RADIUS,
            record_metrics: true,
            wall_clock: false,
        }
    }

    /// `lambda = lambda0 / (eta * tau)`.
    pub fn lambda(&self) -> f64 {
        self.lambda0 / (self.eta_inner * self.tau as f64)
    }

    /// Gaussian kernel with `s^2 = 1/lambda`.
    pub fn kernel(&self, dim: usize) -> Result<KernelSpec> {
        gaussian_kernel((1.0 / self.lambda()).sqrt(), dim)
    }

    pub fn sync_period(&self) -> u64 {
        (self.n_workers * self.tau) as u64
    }

    pub fn inner_eta(&self, lifetime: u64) -> f64 {
        self.inner_decay.apply(self.eta_inner, lifetime)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("dist.{name} must be > 0, got {v}")))
            }
        };
        if self.n_workers == 0 {
            return Err(Error::Config("dist.n_workers must be >= 1".into()));
        }
        if self.tau == 0 {
            return Err(Error::Config("dist.tau must be >= 1".into()));
        }
        positive("eta_inner", self.eta_inner)?;
        positive("eta_outer", self.eta_outer)?;
        positive("lambda0", self.lambda0)?;
        positive("confinement_radius", self.confinement_radius)?;
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::Config(format!("dist.beta must be >= 0, got {}", self.beta)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "dist.momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(Error::Config(format!(
                "dist.temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkerState {
    pub id: usize,
    pub x: ParamVec,
    /// Steps since the last sync.
    pub t_x: u64,
    /// Sum of the `t_x` samples drawn since the last sync.
    pub sample_sum: ParamVec,
    pub rng_seed: u64,
    /// Steps over the whole run; indexes noise and the inner step decay.
    pub lifetime: u64,
}

impl WorkerState {
    pub fn new(id: usize, x: ParamVec, rng_seed: u64) -> Self {
        let dim = x.len();
        WorkerState {
            id,
            x,
            t_x: 0,
            sample_sum: ParamVec::zeros(dim),
            rng_seed,
            lifetime: 0,
        }
    }

    fn reset_counters(&mut self) {
        self.t_x = 0;
        self.sample_sum.fill(0.0);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterState {
    pub y: ParamVec,
    pub t_y: u64,
    /// `g'` of the previous sync; zero before the first.
    pub g_prev: ParamVec,
    pub velocity: ParamVec,
    /// Worker steps taken over the whole run.
    pub worker_steps_total: u64,
}

impl CenterState {
    pub fn new(y: ParamVec) -> Self {
        let dim = y.len();
        CenterState {
            y,
            t_y: 0,
            g_prev: ParamVec::zeros(dim),
            velocity: ParamVec::zeros(dim),
            worker_steps_total: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncEvent {
    /// Index of this sync, starting at 0.
    pub t_y: u64,
    pub g_prime: ParamVec,
    pub g: ParamVec,
    /// Cumulative worker steps at emission; a multiple of `n * tau`.
    pub worker_iteration_total: u64,
}

fn gaussian_vector<R: Rng>(rng: &mut R, dim: usize) -> ParamVec {
    ParamVec::from_vec((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
}

/// Score of `q(x | y)`: `-(g_SAM(x) + grad_x k(x, y))` with a stochastic
/// SAM gradient.
pub fn worker_score(
    obj: &dyn Objective,
    cfg: &DistConfig,
    kern: &KernelSpec,
    w: &WorkerState,
    y: &ParamVec,
) -> ParamVec {
    let noise = SeedStreams::new(w.rng_seed).noise(w.lifetime);
    let mut g = sam_stochastic_grad(obj, &cfg.sam, &w.x, noise);
    g += &kern.grad_x(&w.x, y);
    -g
}

/// One Langevin step `x <- x + eta s + temperature sqrt(2 eta) xi` on
/// `q(x | y)`, followed by the counter and sample-sum update.
pub fn worker_sample_step(obj: &dyn Objective, cfg: &DistConfig, w: WorkerState, y: &ParamVec) -> Result<WorkerState> {
    let kern = cfg.kernel(obj.dim())?;
    worker_step_with(obj, cfg, &kern, w, y)
}

pub(crate) fn worker_step_with(
    obj: &dyn Objective,
    cfg: &DistConfig,
    kern: &KernelSpec,
    mut w: WorkerState,
    y: &ParamVec,
) -> Result<WorkerState> {
    let eta = cfg.inner_eta(w.lifetime);
    let score = worker_score(obj, cfg, kern, &w, y);
    w.x.axpy(eta, &score);
    if cfg.temperature > 0.0 {
        let mut rng = SeedStreams::new(w.rng_seed).rng("langevin", w.lifetime);
        let xi = gaussian_vector(&mut rng, w.x.len());
        w.x.axpy(cfg.temperature * (2.0 * eta).sqrt(), &xi);
    }
    let norm = w.x.norm();
    if !w.x.is_finite() || norm > cfg.confinement_radius {
        return Err(Error::ChainDivergence {
            step: w.lifetime as usize,
            norm,
            radius: cfg.confinement_radius,
        });
    }
    w.t_x += 1;
    w.lifetime += 1;
    w.sample_sum += &w.x;
    Ok(w)
}

/// Center update from all samples gathered since the previous sync, then
/// reset every worker's counter and sum.
pub fn aggregate_and_update_center(
    cfg: &DistConfig,
    workers: &mut [WorkerState],
    c: CenterState,
) -> Result<(CenterState, SyncEvent)> {
    let period = cfg.sync_period();
    let pending: u64 = workers.iter().map(|w| w.t_x).sum();
    if pending != period {
        return Err(Error::Protocol(format!(
            "sync requested with {pending} pending worker steps; expected exactly {period}"
        )));
    }
    let mut sum = ParamVec::zeros(c.y.len());
    for w in workers.iter() {
        sum += &w.sample_sum;
    }
    let (next, event) = center_update(cfg, &sum, pending, c);
    for w in workers.iter_mut() {
        w.reset_counters();
    }
    Ok((next, event))
}

/// Shared by every scheduler: `sample_sum` holds `count` samples.
pub(crate) fn center_update(
    cfg: &DistConfig,
    sample_sum: &ParamVec,
    count: u64,
    mut c: CenterState,
) -> (CenterState, SyncEvent) {
    let mut g_prime = sample_sum.scaled(1.0 / count as f64);
    g_prime -= &c.y;
    let g = if c.t_y == 0 {
        g_prime.clone()
    } else {
        let mut g = g_prime.clone();
        g.axpy(cfg.beta, &(&g_prime - &c.g_prev));
        g
    };
    // Nesterov: v <- mu v + g; y <- y + eta' (mu v + g).
    c.velocity.scale(cfg.momentum);
    c.velocity += &g;
    let mut look = c.velocity.scaled(cfg.momentum);
    look += &g;
    c.y.axpy(cfg.eta_outer, &look);
    c.worker_steps_total += count;
    let event = SyncEvent {
        t_y: c.t_y,
        g_prime: g_prime.clone(),
        g,
        worker_iteration_total: c.worker_steps_total,
    };
    c.t_y += 1;
    c.g_prev = g_prime;
    (c, event)
}

/// Checks cadence and counter resets at every sync.
#[derive(Debug, Clone)]
pub struct ProtocolMonitor {
    period: u64,
    last_total: u64,
    syncs: u64,
}

impl ProtocolMonitor {
    pub fn new(period: u64) -> Self {
        ProtocolMonitor {
            period,
            last_total: 0,
            syncs: 0,
        }
    }

    pub fn syncs(&self) -> u64 {
        self.syncs
    }

    pub fn on_sync(&mut self, event: &SyncEvent) -> Result<()> {
        if event.worker_iteration_total != self.last_total + self.period {
            return Err(Error::Protocol(format!(
                "sync {} at worker total {}, expected {}",
                event.t_y,
                event.worker_iteration_total,
                self.last_total + self.period
            )));
        }
        if event.t_y != self.syncs {
            return Err(Error::Protocol(format!(
                "sync index {} out of order, expected {}",
                event.t_y, self.syncs
            )));
        }
        self.last_total = event.worker_iteration_total;
        self.syncs += 1;
        Ok(())
    }

    pub fn check_reset(&self, workers: &[WorkerState]) -> Result<()> {
        for w in workers {
            if w.t_x != 0 || w.sample_sum.iter().any(|v| *v != 0.0) {
                return Err(Error::Protocol(format!("worker {} not reset after sync", w.id)));
            }
        }
        Ok(())
    }
}

/// Metrics row for a worker step: point `x`, anchor = the worker's view of `y`.
pub(crate) fn worker_row(
    obj: &dyn Objective,
    lambda: f64,
    x: &ParamVec,
    y_view: &ParamVec,
    tick: u64,
    wall_ns: u64,
    worker: usize,
) -> MetricsRecord {
    let mut d = StepDiagnostics::at(obj, x, y_view, lambda);
    d.t = tick;
    d.to_record(wall_ns, false, worker as i64)
}

/// Metrics row for a sync: point `y`, anchor = mean worker position.
pub(crate) fn sync_row(
    obj: &dyn Objective,
    lambda: f64,
    y: &ParamVec,
    xbar: &ParamVec,
    tick: u64,
    wall_ns: u64,
) -> MetricsRecord {
    let mut d = StepDiagnostics::at(obj, y, xbar, lambda);
    d.t = tick;
    d.to_record(wall_ns, true, -1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::make_quadratic;

    #[test]
    fn single_term_aggregate() {
        let mut cfg = DistConfig::new(1, 1, 0.1, 0.1, SamParams::off(1));
        cfg.beta = 0.0;
        let mut ws = vec![WorkerState::new(0, ParamVec::from([2.0]), 1)];
        ws[0].t_x = 1;
        ws[0].sample_sum = ParamVec::from([2.0]);
        let (c, ev) = aggregate_and_update_center(&cfg, &mut ws, CenterState::new(ParamVec::from([0.5]))).unwrap();
        assert_eq!(ev.g_prime, ParamVec::from([1.5]));
        assert_eq!(ev.g, ev.g_prime);
        assert_eq!(ws[0].t_x, 0);
        assert_eq!(c.t_y, 1);
    }

    #[test]
    fn off_schedule_sync_is_rejected() {
        let cfg = DistConfig::new(2, 3, 0.1, 0.1, SamParams::off(1));
        let mut ws = vec![
            WorkerState::new(0, ParamVec::from([0.0]), 1),
            WorkerState::new(1, ParamVec::from([0.0]), 2),
        ];
        ws[0].t_x = 2;
        let err = aggregate_and_update_center(&cfg, &mut ws, CenterState::new(ParamVec::from([0.0]))).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
    }

    #[test]
    fn kernel_drift_is_lambda_coupling() {
        let cfg = DistConfig::new(4, 16, 0.05, 0.2, SamParams::off(2));
        let k = cfg.kernel(2).unwrap();
        let x = ParamVec::from([1.0, -0.5]);
        let y = ParamVec::from([0.25, 0.75]);
        let drift = k.grad_x(&x, &y);
        let coupling = (&x - &y).scaled(cfg.lambda());
        assert!(drift.distance(&coupling) < 1e-12);
    }

    #[test]
    fn worker_step_is_deterministic() {
        let q = make_quadratic(2, ParamVec::from([1.0, 2.0]), 0.3).unwrap();
        let cfg = DistConfig::new(1, 4, 0.05, 0.2, SamParams::with_default_gamma(0.05, 2).unwrap());
        let y = ParamVec::from([0.1, 0.1]);
        let w = WorkerState::new(0, ParamVec::from([1.0, 1.0]), 77);
        let a = worker_sample_step(&q, &cfg, w.clone(), &y).unwrap();
        let b = worker_sample_step(&q, &cfg, w, &y).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.t_x, 1);
        assert_eq!(a.sample_sum, a.x);
    }
}
