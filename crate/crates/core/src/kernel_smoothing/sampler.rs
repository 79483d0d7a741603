use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscapes::Objective;
use crate::param::ParamVec;
use crate::rng::SeedStreams;
use crate::sam_map::{sam_grad, sam_loss, sam_stochastic_grad, SamParams};

use super::{sample_mean, KernelSpec};

pub const DEFAULT_CONFINEMENT_RADIUS: f64 = 1e3;
const ACCEPTANCE_LOW: f64 = 0.05;
const ACCEPTANCE_HIGH: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMethod {
    Sgld,
    Mala,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalSamplerConfig {
    pub method: SamplerMethod,
    pub step: f64,
    /// Steps discarded before collection starts.
    pub burn_in: usize,
    /// Number of samples kept after burn-in.
    pub chain_len: usize,
    pub seed: u64,
    /// Starting point; defaults to the query point `y`.
    pub init: Option<ParamVec>,
    pub confinement_radius: f64,
}

impl ConditionalSamplerConfig {
    /// Burn-in of 20% of `chain_len` and the default confinement radius.
    pub fn new(method: SamplerMethod, step: f64, chain_len: usize, seed: u64) -> Self {
        ConditionalSamplerConfig {
            method,
            step,
            burn_in: chain_len / 5,
            chain_len,
            seed,
            init: None,
            confinement_radius: DEFAULT_CONFINEMENT_RADIUS,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_init(mut self, init: ParamVec) -> Self {
        self.init = Some(init);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.chain_len == 0 {
            return Err(Error::Config("chain_len must be >= 1".into()));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::Config(format!("sampler step must be > 0, got {}", self.step)));
        }
        if !(self.confinement_radius > 0.0) {
            return Err(Error::Config("confinement radius must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerHealth {
    /// MALA only.
    pub acceptance_rate: Option<f64>,
    pub warning: Option<String>,
}

impl SamplerHealth {
    fn from_acceptance(rate: Option<f64>) -> Self {
        let warning = rate.and_then(|r| {
            if r < ACCEPTANCE_LOW {
                Some(format!(
                    "MALA acceptance rate {r:.4} below {ACCEPTANCE_LOW}; step too large"
                ))
            } else if r > ACCEPTANCE_HIGH {
                Some(format!(
                    "MALA acceptance rate {r:.4} above {ACCEPTANCE_HIGH}; step too small"
                ))
            } else {
                None
            }
        });
        SamplerHealth {
            acceptance_rate: rate,
            warning,
        }
    }

    pub fn is_healthy(&self) -> bool {
        self.warning.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct SampleRun {
    pub samples: Vec<ParamVec>,
    pub health: SamplerHealth,
}

#[derive(Debug, Clone)]
pub struct ScoreEstimate {
    pub score: ParamVec,
    pub chain_mean: ParamVec,
    pub health: SamplerHealth,
}

/// Approximate `grad_x log q(x | y) = -(grad f(T(x)) + grad phi(x - y))`
/// using the exact outer gradient at `T(x)`.
fn log_q_drift(obj: &dyn Objective, p: &SamParams, kern: &KernelSpec, x: &ParamVec, y: &ParamVec) -> ParamVec {
    let mut d = sam_grad(obj, p, x);
    d += &kern.grad_x(x, y);
    -d
}

/// Exact unnormalized `log q(x | y) = -f(T(x)) - phi(x - y)`.
fn log_q(obj: &dyn Objective, p: &SamParams, kern: &KernelSpec, x: &ParamVec, y: &ParamVec) -> f64 {
    -sam_loss(obj, p, x) - kern.k(x, y)
}

fn gaussian_vector<R: Rng>(rng: &mut R, dim: usize) -> ParamVec {
    ParamVec::from_vec((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
}

/// Draw `chain_len` samples from `q(x | y)` after `burn_in` discarded steps.
pub fn sample_conditional(
    obj: &dyn Objective,
    p: &SamParams,
    kern: &KernelSpec,
    y: &ParamVec,
    cfg: &ConditionalSamplerConfig,
) -> Result<SampleRun> {
    cfg.validate()?;
    kern.ensure_admissible()?;
    Error::check_dim(obj.dim(), y)?;
    let dim = obj.dim();
    let h = cfg.step;
    let sqrt_h = h.sqrt();
    let streams = SeedStreams::new(cfg.seed);
    let mut rng = streams.rng("conditional-chain", 0);

    let mut x = cfg.init.clone().unwrap_or_else(|| y.clone());
    Error::check_dim(dim, &x)?;
    let total = cfg.burn_in + cfg.chain_len;
    let mut samples = Vec::with_capacity(cfg.chain_len);
    let mut accepted = 0usize;

    // Cached MALA quantities at the current point.
    let mut cur_logq = log_q(obj, p, kern, &x, y);
    let mut cur_drift = log_q_drift(obj, p, kern, &x, y);

    for step in 0..total {
        match cfg.method {
            SamplerMethod::Sgld => {
                let mut g = sam_stochastic_grad(obj, p, &x, streams.noise(step as u64));
                g += &kern.grad_x(&x, y);
                x.axpy(-0.5 * h, &g);
                x.axpy(sqrt_h, &gaussian_vector(&mut rng, dim));
            }
            SamplerMethod::Mala => {
                let mut prop = x.clone();
                prop.axpy(0.5 * h, &cur_drift);
                prop.axpy(sqrt_h, &gaussian_vector(&mut rng, dim));
                let prop_logq = log_q(obj, p, kern, &prop, y);
                let prop_drift = log_q_drift(obj, p, kern, &prop, y);

                let mut fwd = &prop - &x;
                fwd.axpy(-0.5 * h, &cur_drift);
                let mut bwd = &x - &prop;
                bwd.axpy(-0.5 * h, &prop_drift);
                let log_ratio = prop_logq - cur_logq + (fwd.norm_sq() - bwd.norm_sq()) / (2.0 * h);

                let u: f64 = rng.random();
                if log_ratio.is_finite() && u.ln() < log_ratio {
                    x = prop;
                    cur_logq = prop_logq;
                    cur_drift = prop_drift;
                    if step >= cfg.burn_in {
                        accepted += 1;
                    }
                }
            }
        }
        let norm = x.norm();
        if !x.is_finite() || norm > cfg.confinement_radius {
            return Err(Error::ChainDivergence {
                step,
                norm,
                radius: cfg.confinement_radius,
            });
        }
        if step >= cfg.burn_in {
            samples.push(x.clone());
        }
    }

    let rate = match cfg.method {
        SamplerMethod::Mala => Some(accepted as f64 / cfg.chain_len as f64),
        SamplerMethod::Sgld => None,
    };
    Ok(SampleRun {
        samples,
        health: SamplerHealth::from_acceptance(rate),
    })
}

/// Estimate `grad_y log pi_LSAM(y) = -E_q[grad_y k(x, y)]` from a chain on
/// `q(x | y)`.
pub fn score_via_conditional(
    obj: &dyn Objective,
    p: &SamParams,
    kern: &KernelSpec,
    y: &ParamVec,
    cfg: &ConditionalSamplerConfig,
) -> Result<ScoreEstimate> {
    let run = sample_conditional(obj, p, kern, y, cfg)?;
    Ok(ScoreEstimate {
        score: kern.score_from_samples(&run.samples, y),
        chain_mean: sample_mean(&run.samples),
        health: run.health,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel_smoothing::gaussian_kernel;
    use crate::landscapes::make_quadratic;

    #[test]
    fn deterministic_given_seed() {
        let q = make_quadratic(1, ParamVec::from([1.0]), 0.0).unwrap();
        let k = gaussian_kernel(1.0, 1).unwrap();
        let cfg = ConditionalSamplerConfig::new(SamplerMethod::Mala, 0.5, 500, 9);
        let y = ParamVec::from([1.0]);
        let a = sample_conditional(&q, &SamParams::off(1), &k, &y, &cfg).unwrap();
        let b = sample_conditional(&q, &SamParams::off(1), &k, &y, &cfg).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.samples.len(), 500);
    }

    #[test]
    fn divergence_is_reported() {
        let q = make_quadratic(1, ParamVec::from([1.0]), 0.0).unwrap();
        let k = gaussian_kernel(1.0, 1).unwrap();
        // SGLD with step far above the stability limit explodes.
        let mut cfg = ConditionalSamplerConfig::new(SamplerMethod::Sgld, 10.0, 1000, 1);
        cfg.confinement_radius = 50.0;
        let err = sample_conditional(&q, &SamParams::off(1), &k, &ParamVec::from([1.0]), &cfg).unwrap_err();
        assert!(matches!(err, Error::ChainDivergence { .. }));
    }

    #[test]
    fn tiny_step_mala_accepts_almost_everything() {
        let q = make_quadratic(1, ParamVec::from([1.0]), 0.0).unwrap();
        let k = gaussian_kernel(1.0, 1).unwrap();
        let cfg = ConditionalSamplerConfig::new(SamplerMethod::Mala, 1e-6, 2000, 4);
        let run = sample_conditional(&q, &SamParams::off(1), &k, &ParamVec::from([0.5]), &cfg).unwrap();
        let rate = run.health.acceptance_rate.unwrap();
        assert!(rate > 0.99, "rate {rate}");
        assert!(run.health.warning.is_some());
    }
}
