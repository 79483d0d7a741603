//! Run configuration files (TOML). One file fully determines a run,
//! including every seed. Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist_runtime::{BaselineAlgo, BaselineConfig, DistConfig, Scheduler};
use crate::dual_loop::{EtaDecay, RhoMode, ScheduleSpec};
use crate::error::{Error, Result};
use crate::kernel_smoothing::DEFAULT_CONFINEMENT_RADIUS;
use crate::landscapes::{make_basin_landscape, make_double_well, make_mlp_regression, make_quadratic, Objective};
use crate::param::ParamVec;
use crate::sam_map::{default_gamma, SamParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    Quadratic {
        hessian_diag: Vec<f64>,
        #[serde(default)]
        noise_sigma: f64,
    },
    Basin3 {
        #[serde(default)]
        seed: i64,
        #[serde(default)]
        noise_sigma: f64,
    },
    Mlp {
        hidden: usize,
        samples: usize,
        #[serde(default)]
        seed: i64,
    },
    DoubleWell {
        #[serde(default)]
        noise_sigma: f64,
    },
}

impl ObjectiveConfig {
    pub fn build(&self) -> Result<Box<dyn Objective>> {
        Ok(match self {
            ObjectiveConfig::Quadratic {
                hessian_diag,
                noise_sigma,
            } => Box::new(make_quadratic(
                hessian_diag.len(),
                ParamVec::from_slice(hessian_diag),
                *noise_sigma,
            )?),
            ObjectiveConfig::Basin3 { seed, noise_sigma } => {
                Box::new(make_basin_landscape(*seed).with_noise(*noise_sigma))
            }
            ObjectiveConfig::Mlp { hidden, samples, seed } => Box::new(make_mlp_regression(*hidden, *samples, *seed)?),
            ObjectiveConfig::DoubleWell { noise_sigma } => Box::new(make_double_well(*noise_sigma)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Coupled single chain with plain stochastic gradients.
    Esgd,
    /// Coupled single chain with SAM gradients (constant or decaying radius).
    LsamChain,
    /// Distributed sampling workers and a center optimizer.
    Lsam,
    DpSgd,
    DpSam,
    Easgd,
    Lsgd,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "esgd" => Ok(Algorithm::Esgd),
            "lsam_chain" => Ok(Algorithm::LsamChain),
            "lsam" => Ok(Algorithm::Lsam),
            "dp_sgd" => Ok(Algorithm::DpSgd),
            "dp_sam" => Ok(Algorithm::DpSam),
            "easgd" => Ok(Algorithm::Easgd),
            "lsgd" => Ok(Algorithm::Lsgd),
            _ => Err(Error::UnsupportedAlgorithm(s.to_string())),
        }
    }
}

impl Algorithm {
    pub fn baseline(self) -> Option<BaselineAlgo> {
        match self {
            Algorithm::DpSgd => Some(BaselineAlgo::DpSgd),
            Algorithm::DpSam => Some(BaselineAlgo::DpSam),
            Algorithm::Easgd => Some(BaselineAlgo::Easgd),
            Algorithm::Lsgd => Some(BaselineAlgo::Lsgd),
            _ => None,
        }
    }
}

fn default_beta() -> f64 {
    0.9
}
fn default_one() -> f64 {
    1.0
}
fn default_momentum() -> f64 {
    0.9
}
fn default_confinement() -> f64 {
    DEFAULT_CONFINEMENT_RADIUS
}
fn default_rho() -> f64 {
    0.05
}
fn default_inner_decay() -> EtaDecay {
    EtaDecay::Constant
}
fn default_elastic() -> f64 {
    0.1
}

/// `[dist]` table: shape and optimizer of the distributed runtime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSection {
    pub n_workers: usize,
    pub tau: usize,
    pub eta_inner: f64,
    /// `lambda = lambda0 / (eta_inner * tau)`.
    pub lambda0: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_one")]
    pub eta_outer: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_one")]
    pub temperature: f64,
    #[serde(default = "default_inner_decay")]
    pub inner_decay: EtaDecay,
    /// SAM radius inside the workers' score.
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub scheduler: Scheduler,
    #[serde(default = "default_confinement")]
    pub confinement_radius: f64,
}

/// `[baseline]` table for the comparison algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    pub n_workers: usize,
    #[serde(default = "default_one_usize")]
    pub tau: usize,
    #[serde(default = "default_elastic")]
    pub elastic: f64,
    #[serde(default = "default_elastic")]
    pub pull: f64,
}

fn default_one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub algorithm: Algorithm,
    /// Steps for single chains, outer steps for `lsam`, rounds for baselines.
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub output_path: String,
    #[serde(default)]
    pub wall_clock: bool,
    /// Initial point; the origin shifted by one in every coordinate when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Half-width of the seeded uniform jitter added to each worker's start.
    #[serde(default)]
    pub init_spread: f64,
    /// SAM stabilizer; dimension-aware default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub objective: ObjectiveConfig,
    pub schedule: ScheduleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineSection>,
}

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{name}: {msg}"))
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(&self.output_path)
    }

    pub fn objective(&self) -> Result<Box<dyn Objective>> {
        self.objective.build().map_err(|e| field("objective", e))
    }

    pub fn sam_params(&self, rho: f64, dim: usize) -> Result<SamParams> {
        SamParams::new(rho, self.gamma.unwrap_or_else(|| default_gamma(dim))).map_err(|e| field("gamma", e))
    }

    pub fn initial_point(&self, dim: usize) -> Result<ParamVec> {
        match &self.x0 {
            Some(v) if v.len() != dim => Err(field("x0", format!("expected {dim} values, got {}", v.len()))),
            Some(v) => Ok(ParamVec::from_slice(v)),
            None => Ok(ParamVec::from_vec(vec![1.0; dim])),
        }
    }

    pub fn dist_config(&self, dim: usize) -> Result<DistConfig> {
        let d = self
            .dist
            .as_ref()
            .ok_or_else(|| field("dist", "required for algorithm 'lsam'"))?;
        let mut cfg = DistConfig::new(d.n_workers, d.tau, d.eta_inner, d.lambda0, self.sam_params(d.rho, dim)?);
        cfg.beta = d.beta;
        cfg.eta_outer = d.eta_outer;
        cfg.momentum = d.momentum;
        cfg.temperature = d.temperature;
        cfg.inner_decay = d.inner_decay.clone();
        cfg.scheduler = d.scheduler;
        cfg.confinement_radius = d.confinement_radius;
        cfg.wall_clock = self.wall_clock;
        cfg.validate().map_err(|e| field("dist", e))?;
        Ok(cfg)
    }

    pub fn baseline_config(&self, algo: BaselineAlgo, dim: usize) -> Result<BaselineConfig> {
        let b = self
            .baseline
            .as_ref()
            .ok_or_else(|| field("baseline", "required for baseline algorithms"))?;
        let mut cfg = BaselineConfig::new(b.n_workers, b.tau, self.schedule.eta0, dim);
        cfg.eta_decay = self.schedule.eta_decay.clone();
        cfg.elastic = b.elastic;
        cfg.pull = b.pull;
        cfg.wall_clock = self.wall_clock;
        if algo == BaselineAlgo::DpSam {
            cfg.sam = self.sam_params(self.schedule.rho0, dim)?;
        }
        Ok(cfg)
    }

    /// Field-level checks that do not need to build the objective.
    pub fn validate_fields(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(field("name", "must not be empty"));
        }
        if self.horizon == 0 {
            return Err(field("horizon", "must be >= 1"));
        }
        if self.seeds.is_empty() {
            return Err(field("seeds", "at least one seed is required"));
        }
        if self.output_path.is_empty() {
            return Err(field("output_path", "must not be empty"));
        }
        if !(self.init_spread >= 0.0) || !self.init_spread.is_finite() {
            return Err(field("init_spread", format!("must be >= 0, got {}", self.init_spread)));
        }
        match self.algorithm {
            Algorithm::Esgd if self.schedule.rho_mode != RhoMode::Zero => {
                Err(field("schedule.rho_mode", "esgd requires rho_mode = \"zero\""))
            }
            Algorithm::LsamChain if self.schedule.rho_mode == RhoMode::Zero => Err(field(
                "schedule.rho_mode",
                "lsam_chain requires rho_mode = \"constant\" or \"decaying\"",
            )),
            Algorithm::Lsam if self.dist.is_none() => Err(field("dist", "required for algorithm 'lsam'")),
            a if a.baseline().is_some() && self.baseline.is_none() => {
                Err(field("baseline", "required for baseline algorithms"))
            }
            _ => Ok(()),
        }
    }

    /// Full validation, including the step caps that need the objective's `L`.
    pub fn validate(&self) -> Result<()> {
        self.validate_fields()?;
        let obj = self.objective()?;
        let dim = obj.dim();
        self.initial_point(dim)?;
        match self.algorithm {
            Algorithm::Esgd | Algorithm::LsamChain => {
                self.schedule.validate(obj.smoothness())?;
                self.sam_params(self.schedule.rho0, dim)?;
            }
            Algorithm::Lsam => {
                self.dist_config(dim)?;
            }
            a => {
                self.baseline_config(a.baseline().expect("baseline algorithm"), dim)?;
            }
        }
        Ok(())
    }

    /// Replace the seed list with one seed.
    pub fn override_seed(&mut self, seed: u64) {
        self.seeds = vec![seed];
    }

    pub fn override_scheduler(&mut self, scheduler: Scheduler) -> Result<()> {
        match self.dist.as_mut() {
            Some(d) => {
                d.scheduler = scheduler;
                Ok(())
            }
            None => Err(field("dist.scheduler", "the configuration has no [dist] table")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "q"
algorithm = "esgd"
horizon = 10
seeds = [1]
output_path = "out/q"

[objective]
kind = "quadratic"
hessian_diag = [1.0, 0.5]
noise_sigma = 0.5

[schedule]
eta0 = 0.5
rho_mode = "zero"
lambda = 1.0
alpha = 0.5
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        c.validate().unwrap();
        let again = RunConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = MINIMAL.replace("alpha = 0.5", "alpha = 0.5\nalhpa = 0.1");
        let err = RunConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("alhpa"), "{err}");
    }

    #[test]
    fn cap_violation_names_bound() {
        let text = MINIMAL
            .replace("rho_mode = \"zero\"", "rho_mode = \"constant\"\nrho0 = 0.1")
            .replace("\"esgd\"", "\"lsam_chain\"");
        let err = RunConfig::from_toml_str(&text)
            .unwrap()
            .validate()
            .unwrap_err()
            .to_string();
        assert!(err.contains("η₀ ≤ 1/(4(L+λ))"), "{err}");
    }
}
