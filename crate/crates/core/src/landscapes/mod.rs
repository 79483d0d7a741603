//! Test objectives with exact gradients and stochastic-gradient oracles.
//!
//! Every objective is immutable after construction and evaluates as a pure
//! function of `(point, noise seed)`, so a single instance can be shared by
//! any number of concurrent chains or workers.

mod basin;
mod double_well;
mod mlp;
mod quadratic;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::param::ParamVec;
use crate::rng::NoiseSeed;

pub use basin::{make_basin_landscape, BasinLandscape, Bump, BASIN_DOMAIN};
pub use double_well::{make_double_well, DoubleWell};
pub use mlp::{make_mlp_regression, MlpBatch, MlpRegression};
pub use quadratic::{make_quadratic, Quadratic};

/// Qualitative basin type of a cataloged local minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasinLabel {
    DeepSharp,
    WideShallow,
    WideDeep,
}

impl fmt::Display for BasinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasinLabel::DeepSharp => "deep-sharp",
            BasinLabel::WideShallow => "wide-shallow",
            BasinLabel::WideDeep => "wide-deep",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub location: ParamVec,
    pub label: BasinLabel,
}

/// Known constants of an objective. `None` means unknown or unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveConstants {
    pub dim: usize,
    /// Gradient Lipschitz constant.
    pub smoothness_l: Option<f64>,
    /// Bound on `E |g(x; xi) - grad f(x)|^2` is `noise_sigma^2`.
    pub noise_sigma: f64,
    /// Bound on `E |g(x; xi)|` over the whole space.
    pub grad_norm_c: Option<f64>,
    pub minima: Vec<Minimum>,
}

pub trait Objective: Send + Sync {
    fn name(&self) -> &str;

    fn constants(&self) -> &ObjectiveConstants;

    fn eval(&self, x: &ParamVec) -> f64;

    fn grad(&self, x: &ParamVec) -> ParamVec;

    /// Unbiased stochastic gradient. Two calls with the same seed draw the
    /// same noise realization.
    fn stochastic_grad(&self, x: &ParamVec, noise: NoiseSeed) -> ParamVec;

    fn dim(&self) -> usize {
        self.constants().dim
    }

    fn smoothness(&self) -> Option<f64> {
        self.constants().smoothness_l
    }

    fn noise_sigma(&self) -> f64 {
        self.constants().noise_sigma
    }

    fn minima(&self) -> &[Minimum] {
        &self.constants().minima
    }

    /// Effective bound `C` on the stochastic gradient norm for iterates
    /// confined to the ball of radius `radius` around the origin:
    /// `L * R + |grad f(0)| + sigma * sqrt(d)`.
    fn confined_grad_bound(&self, radius: f64) -> Option<f64> {
        if let Some(c) = self.constants().grad_norm_c {
            return Some(c);
        }
        let l = self.smoothness()?;
        let d = self.dim();
        let g0 = self.grad(&ParamVec::zeros(d)).norm();
        Some(l * radius + g0 + self.noise_sigma() * (d as f64).sqrt())
    }
}

/// Number of full-gradient descent steps used by [`basin_of`].
pub const BASIN_DESCENT_STEPS: usize = 10_000;

/// Classify `x` into a cataloged basin: run [`BASIN_DESCENT_STEPS`] steps of
/// gradient descent with step `1/L`, then return the nearest cataloged
/// minimum. `None` when the objective has no catalog or no known `L`.
pub fn basin_of(obj: &dyn Objective, x: &ParamVec) -> Option<BasinLabel> {
    let minima = obj.minima();
    if minima.is_empty() {
        return None;
    }
    let step = 1.0 / obj.smoothness()?;
    let mut p = x.clone();
    for _ in 0..BASIN_DESCENT_STEPS {
        let g = obj.grad(&p);
        p.axpy(-step, &g);
    }
    minima
        .iter()
        .min_by(|a, b| {
            a.location
                .distance(&p)
                .partial_cmp(&b.location.distance(&p))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|m| m.label)
}

/// Additive Gaussian gradient noise with total second moment `sigma^2`:
/// each coordinate has standard deviation `sigma / sqrt(d)`.
pub(crate) fn gaussian_gradient_noise(dim: usize, sigma: f64, noise: NoiseSeed) -> ParamVec {
    use rand_distr::{Distribution, StandardNormal};
    if sigma == 0.0 {
        return ParamVec::zeros(dim);
    }
    let mut rng = noise.rng();
    let scale = sigma / (dim as f64).sqrt();
    ParamVec::from_vec(
        (0..dim)
            .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect(),
    )
}
