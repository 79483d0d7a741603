//! Score estimation by conditional sampling against two references: the
//! Gaussian conjugate closed form and a finite difference of the quadrature
//! log-density on the double well.

use serde::Serialize;

use crate::error::Result;
use crate::kernel_smoothing::{
    gaussian_kernel, score_via_conditional, ConditionalSamplerConfig, LsamDensity, SamplerMethod,
};
use crate::landscapes::{make_double_well, make_quadratic};
use crate::param::ParamVec;
use crate::quadrature::{Axis, QuadratureGrid};
use crate::sam_map::SamParams;

use super::{Outcome, VerifyOptions};

pub const SCORE_TOL: f64 = 0.05;
pub const QUERY_POINTS: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

#[derive(Debug, Clone, Serialize)]
pub struct ScoreCase {
    pub testbed: &'static str,
    pub y: f64,
    pub estimate: f64,
    pub reference: f64,
    /// MALA acceptance rate.
    pub acceptance_rate: Option<f64>,
}

impl ScoreCase {
    pub fn abs_error(&self) -> f64 {
        (self.estimate - self.reference).abs()
    }
}

/// `f = x^2/2`, `rho = 0`, `s = 1`: reference `-y / (1 + s^2)`.
pub fn conjugate_scores(chain_len: usize, seed: u64) -> Result<Vec<ScoreCase>> {
    let s = 1.0;
    let obj = make_quadratic(1, ParamVec::from([1.0]), 0.0)?;
    let kern = gaussian_kernel(s, 1)?;
    let p = SamParams::off(1);
    QUERY_POINTS
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let cfg = ConditionalSamplerConfig::new(SamplerMethod::Mala, 0.8, chain_len, seed + i as u64);
            let est = score_via_conditional(&obj, &p, &kern, &ParamVec::from([y]), &cfg)?;
            Ok(ScoreCase {
                testbed: "conjugate-quadratic",
                y,
                estimate: est.score[0],
                reference: -y / (1.0 + s * s),
                acceptance_rate: est.health.acceptance_rate,
            })
        })
        .collect()
}

/// `f = (x^2 - 1)^2`, `rho = 0.05`, `gamma = 1e-8`, `s = 0.5`: reference is
/// the central difference of the quadrature log-density.
pub fn double_well_scores(chain_len: usize, seed: u64) -> Result<Vec<ScoreCase>> {
    let s = 0.5;
    let obj = make_double_well(0.0)?;
    let kern = gaussian_kernel(s, 1)?;
    let p = SamParams::new(0.05, 1e-8)?;
    let grid = QuadratureGrid::D1(Axis::with_spacing(-4.0, 4.0, 2.5e-4)?);
    let dens = LsamDensity::new(&obj, &p, &kern, &grid)?;
    let h = 1e-3;
    QUERY_POINTS
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let up = dens.log_density(&ParamVec::from([y + h]))?;
            let down = dens.log_density(&ParamVec::from([y - h]))?;
            let cfg = ConditionalSamplerConfig::new(SamplerMethod::Mala, 0.05, chain_len, seed + 100 + i as u64)
                .with_init(ParamVec::from([y.clamp(-1.0, 1.0)]));
            let est = score_via_conditional(&obj, &p, &kern, &ParamVec::from([y]), &cfg)?;
            Ok(ScoreCase {
                testbed: "double-well",
                y,
                estimate: est.score[0],
                reference: (up - down) / (2.0 * h),
                acceptance_rate: est.health.acceptance_rate,
            })
        })
        .collect()
}

pub fn score_criterion(opts: &VerifyOptions) -> Result<Outcome> {
    let mut cases = conjugate_scores(opts.score_chain_len, opts.seed)?;
    cases.extend(double_well_scores(opts.score_chain_len, opts.seed)?);
    let worst = |bed: &str| {
        cases
            .iter()
            .filter(|c| c.testbed == bed)
            .map(ScoreCase::abs_error)
            .fold(0.0, f64::max)
    };
    let (wc, wd) = (worst("conjugate-quadratic"), worst("double-well"));
    Ok(Outcome {
        name: "score-identity",
        passed: wc < SCORE_TOL && wd < SCORE_TOL,
        detail: format!("max |err| conjugate {wc:.4}, double-well {wd:.4} < 0.05"),
        measurements: serde_json::to_value(&cases)?,
    })
}
