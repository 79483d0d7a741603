//! Comparison algorithms sharing the metrics schema of the main runtime.
//!
//! - `dp-sgd`: synchronous data parallelism, gradients averaged every step.
//! - `dp-sam`: the same with single-sample SAM gradients.
//! - `easgd`: local SGD with an elastic exchange towards a center every
//!   `tau` local steps.
//! - `lsgd`: local SGD with every worker pulled towards the current
//!   best-loss worker every `tau` rounds.

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dual_loop::{EtaDecay, StepDiagnostics};
use crate::error::{Error, Result};
use crate::landscapes::Objective;
use crate::metrics::{should_record, MetricsRecord};
use crate::param::ParamVec;
use crate::rng::SeedStreams;
use crate::sam_map::{sam_stochastic_grad, SamParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineAlgo {
    DpSgd,
    DpSam,
    Easgd,
    Lsgd,
}

impl FromStr for BaselineAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "dp-sgd" => Ok(BaselineAlgo::DpSgd),
            "dp-sam" => Ok(BaselineAlgo::DpSam),
            "easgd" => Ok(BaselineAlgo::Easgd),
            "lsgd" => Ok(BaselineAlgo::Lsgd),
            _ => Err(Error::UnsupportedAlgorithm(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub n_workers: usize,
    /// Communication period; must be 1 for the data-parallel methods.
    pub tau: usize,
    pub eta0: f64,
    pub eta_decay: EtaDecay,
    /// Perturbation for `dp-sam`.
    pub sam: SamParams,
    /// EASGD moving rate: each exchange moves `elastic (x_i - y)`.
    pub elastic: f64,
    /// LSGD pull fraction towards the leader.
    pub pull: f64,
    pub record_metrics: bool,
    pub wall_clock: bool,
}

impl BaselineConfig {
    pub fn new(n_workers: usize, tau: usize, eta0: f64, dim: usize) -> Self {
        BaselineConfig {
            n_workers,
            tau,
            eta0,
            eta_decay: EtaDecay::Constant,
            sam: SamParams::off(dim),
            elastic: 0.1,
            pull: 0.1,
            record_metrics: true,
            wall_clock: false,
        }
    }

    fn validate(&self, algo: BaselineAlgo) -> Result<()> {
        if self.n_workers == 0 || self.tau == 0 {
            return Err(Error::Config("baseline n_workers and tau must be >= 1".into()));
        }
        if !(self.eta0 > 0.0) || !self.eta0.is_finite() {
            return Err(Error::Config(format!("baseline eta0 must be > 0, got {}", self.eta0)));
        }
        match algo {
            BaselineAlgo::DpSgd | BaselineAlgo::DpSam if self.tau != 1 => Err(Error::Config(format!(
                "{algo:?} is synchronous and requires tau = 1, got {}",
                self.tau
            ))),
            BaselineAlgo::Easgd if !(0.0..=1.0).contains(&self.elastic) => Err(Error::Config(format!(
                "easgd elastic coefficient must be in [0, 1], got {}",
                self.elastic
            ))),
            BaselineAlgo::Lsgd if !(0.0..=1.0).contains(&self.pull) => {
                Err(Error::Config(format!("lsgd pull must be in [0, 1], got {}", self.pull)))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub records: Vec<MetricsRecord>,
    /// Shared parameters (DP), elastic center (EASGD) or leader (LSGD).
    pub center: ParamVec,
    pub workers: Vec<ParamVec>,
}

struct Recorder<'a> {
    obj: &'a dyn Objective,
    enabled: bool,
    wall_clock: bool,
    start: Instant,
    records: Vec<MetricsRecord>,
}

impl Recorder<'_> {
    fn push(&mut self, x: &ParamVec, anchor: &ParamVec, lambda: f64, tick: u64, sync: bool, worker: i64) {
        if self.enabled && should_record(tick, sync) {
            let mut d = StepDiagnostics::at(self.obj, x, anchor, lambda);
            d.t = tick;
            let wall = if self.wall_clock {
                self.start.elapsed().as_nanos() as u64
            } else {
                0
            };
            self.records.push(d.to_record(wall, sync, worker));
        }
    }
}

/// Run `algo` for `horizon` rounds; one round is one step of every worker.
pub fn run_baseline(
    obj: &dyn Objective,
    algo: BaselineAlgo,
    cfg: &BaselineConfig,
    x0s: &[ParamVec],
    horizon: u64,
    seed: u64,
) -> Result<BaselineRun> {
    cfg.validate(algo)?;
    let expected = match algo {
        BaselineAlgo::DpSgd | BaselineAlgo::DpSam => 1,
        _ => cfg.n_workers,
    };
    if x0s.len() != expected {
        return Err(Error::Config(format!(
            "{algo:?} expects {expected} initial points, got {}",
            x0s.len()
        )));
    }
    for x in x0s {
        Error::check_dim(obj.dim(), x)?;
    }
    let streams = SeedStreams::new(seed);
    let worker_streams: Vec<SeedStreams> = (0..cfg.n_workers).map(|i| streams.child("worker", i as u64)).collect();
    let mut rec = Recorder {
        obj,
        enabled: cfg.record_metrics,
        wall_clock: cfg.wall_clock,
        start: Instant::now(),
        records: Vec::new(),
    };

    match algo {
        BaselineAlgo::DpSgd | BaselineAlgo::DpSam => {
            let mut x = x0s[0].clone();
            let sam = match algo {
                BaselineAlgo::DpSam => cfg.sam,
                _ => cfg.sam.with_rho(0.0),
            };
            for t in 0..horizon {
                rec.push(&x, &x, 0.0, t, true, -1);
                let mut avg = ParamVec::zeros(x.len());
                for ws in &worker_streams {
                    avg += &sam_stochastic_grad(obj, &sam, &x, ws.noise(t));
                }
                avg.scale(1.0 / cfg.n_workers as f64);
                x.axpy(-cfg.eta_decay.apply(cfg.eta0, t), &avg);
                ensure_finite(&x, t)?;
            }
            Ok(BaselineRun {
                records: rec.records,
                center: x.clone(),
                workers: vec![x; cfg.n_workers],
            })
        }
        BaselineAlgo::Easgd => {
            let mut xs = x0s.to_vec();
            let mut y = mean(&xs);
            let mut tick = 0u64;
            for t in 0..horizon {
                for (i, ws) in worker_streams.iter().enumerate() {
                    rec.push(&xs[i], &y, cfg.elastic, tick, false, i as i64);
                    tick += 1;
                    let g = obj.stochastic_grad(&xs[i], ws.noise(t));
                    xs[i].axpy(-cfg.eta_decay.apply(cfg.eta0, t), &g);
                    if (t + 1) % cfg.tau as u64 == 0 {
                        let d = (&xs[i] - &y).scaled(cfg.elastic);
                        xs[i] -= &d;
                        y += &d;
                        rec.push(&y, &xs[i], cfg.elastic, tick, true, -1);
                        tick += 1;
                    }
                    ensure_finite(&xs[i], t)?;
                }
            }
            Ok(BaselineRun {
                records: rec.records,
                center: y,
                workers: xs,
            })
        }
        BaselineAlgo::Lsgd => {
            let mut xs = x0s.to_vec();
            let mut leader = best(obj, &xs);
            let mut tick = 0u64;
            for t in 0..horizon {
                for (i, ws) in worker_streams.iter().enumerate() {
                    rec.push(&xs[i], &xs[leader], cfg.pull, tick, false, i as i64);
                    tick += 1;
                    let g = obj.stochastic_grad(&xs[i], ws.noise(t));
                    xs[i].axpy(-cfg.eta_decay.apply(cfg.eta0, t), &g);
                    ensure_finite(&xs[i], t)?;
                }
                if (t + 1) % cfg.tau as u64 == 0 {
                    leader = best(obj, &xs);
                    let target = xs[leader].clone();
                    for x in xs.iter_mut() {
                        let d = (&*x - &target).scaled(cfg.pull);
                        *x -= &d;
                    }
                    rec.push(&target, &mean(&xs), cfg.pull, tick, true, -1);
                    tick += 1;
                }
            }
            let center = xs[leader].clone();
            Ok(BaselineRun {
                records: rec.records,
                center,
                workers: xs,
            })
        }
    }
}

fn ensure_finite(x: &ParamVec, t: u64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericAbort {
            step: t as usize,
            last_good: None,
        })
    }
}

fn mean(xs: &[ParamVec]) -> ParamVec {
    let mut m = ParamVec::zeros(xs[0].len());
    for x in xs {
        m += x;
    }
    m.scaled(1.0 / xs.len() as f64)
}

fn best(obj: &dyn Objective, xs: &[ParamVec]) -> usize {
    let mut best = 0;
    let mut best_f = f64::INFINITY;
    for (i, x) in xs.iter().enumerate() {
        let f = obj.eval(x);
        if f < best_f {
            best_f = f;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::make_quadratic;

    #[test]
    fn unknown_algorithm_is_rejected() {
        assert!(matches!(
            "adam".parse::<BaselineAlgo>(),
            Err(Error::UnsupportedAlgorithm(_))
        ));
        assert_eq!("dp_sgd".parse::<BaselineAlgo>().unwrap(), BaselineAlgo::DpSgd);
    }

    #[test]
    fn dp_requires_tau_one() {
        let q = make_quadratic(2, ParamVec::from([1.0, 1.0]), 0.0).unwrap();
        let cfg = BaselineConfig::new(2, 4, 0.1, 2);
        assert!(run_baseline(&q, BaselineAlgo::DpSgd, &cfg, &[ParamVec::zeros(2)], 5, 0).is_err());
    }

    #[test]
    fn zero_elastic_freezes_center() {
        let q = make_quadratic(2, ParamVec::from([1.0, 3.0]), 0.2).unwrap();
        let mut cfg = BaselineConfig::new(3, 2, 0.1, 2);
        cfg.elastic = 0.0;
        let x0s = vec![
            ParamVec::from([1.0, 1.0]),
            ParamVec::from([-1.0, 2.0]),
            ParamVec::from([0.5, 0.0]),
        ];
        let run = run_baseline(&q, BaselineAlgo::Easgd, &cfg, &x0s, 50, 3).unwrap();
        let y0 = mean(&x0s);
        assert_eq!(run.center, y0);
    }
}
