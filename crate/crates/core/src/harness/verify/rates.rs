//! Rate experiments on the 2-D quadratic: seed-averaged per-step traces of
//! `|G_t|^2`, `|z_t|^2` and `|grad f(x_t)|^2` for the single-chain update.

use serde::Serialize;

use crate::dual_loop::{run_chain_observed, RhoMode, ScheduleSpec};
use crate::error::Result;
use crate::landscapes::{make_quadratic, Objective};
use crate::param::ParamVec;
use crate::sam_map::SamParams;

use super::super::oracles::{fit_through_origin, log_over_sqrt, loglog_slope};

/// Relative slack for the per-step gradient-norm inequality.
pub const IDENTITY_REL_TOL: f64 = 1e-9;

/// Shared testbed: quadratic with curvatures `(1, 0.5)` (so `L = 1`),
/// coupling `lambda = 1`, averaging `alpha = 0.5`, start `(2, -2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Testbed {
    pub hessian: [f64; 2],
    pub lambda: f64,
    pub alpha: f64,
    pub x0: [f64; 2],
}

impl Default for Testbed {
    fn default() -> Self {
        Testbed {
            hessian: [1.0, 0.5],
            lambda: 1.0,
            alpha: 0.5,
            x0: [2.0, -2.0],
        }
    }
}

impl Testbed {
    pub fn objective(&self, sigma: f64) -> Result<crate::landscapes::Quadratic> {
        make_quadratic(2, ParamVec::from(self.hessian), sigma)
    }

    pub fn smoothness(&self) -> f64 {
        self.hessian.iter().cloned().fold(0.0, f64::max)
    }
}

/// Seed-averaged traces, one entry per step.
#[derive(Debug, Clone)]
pub struct Traces {
    pub g_norm_sq: Vec<f64>,
    pub z_norm_sq: Vec<f64>,
    pub grad_norm_sq: Vec<f64>,
    /// Steps where `|grad f|^2 > 2|G|^2 + 2 lambda^2 |z|^2` beyond rounding.
    pub identity_violations: u64,
    pub identity_checked: u64,
    /// Largest `|x_t|` and `|z_t|` seen over all seeds.
    pub max_x_norm: f64,
    pub max_z_norm: f64,
}

impl Traces {
    /// Running average `(1/T) sum_{t<T} trace[t]` for every `T = 1..=len`.
    pub fn running_average(trace: &[f64]) -> Vec<f64> {
        let mut acc = 0.0;
        trace
            .iter()
            .enumerate()
            .map(|(i, v)| {
                acc += v;
                acc / (i + 1) as f64
            })
            .collect()
    }

    /// Mean of `trace` over `[0.9 t, t)`.
    pub fn window_mean(trace: &[f64], t: usize) -> f64 {
        let lo = (t as f64 * 0.9) as usize;
        let slice = &trace[lo..t];
        slice.iter().sum::<f64>() / slice.len() as f64
    }
}

/// `n_seeds` chains of length `horizon`, averaged step by step.
pub fn seed_averaged_traces(
    obj: &dyn Objective,
    sched: &ScheduleSpec,
    x0: &ParamVec,
    horizon: u64,
    n_seeds: u64,
    base_seed: u64,
) -> Result<Traces> {
    let len = horizon as usize;
    let mut tr = Traces {
        g_norm_sq: vec![0.0; len],
        z_norm_sq: vec![0.0; len],
        grad_norm_sq: vec![0.0; len],
        identity_violations: 0,
        identity_checked: 0,
        max_x_norm: 0.0,
        max_z_norm: 0.0,
    };
    let w = 1.0 / n_seeds as f64;
    let lam2 = sched.lambda * sched.lambda;
    let sam = SamParams::off(obj.dim());
    for s in 0..n_seeds {
        run_chain_observed(
            obj,
            sched,
            &sam,
            x0.clone(),
            x0.clone(),
            horizon,
            base_seed + s,
            |d, next| {
                let t = d.t as usize;
                tr.g_norm_sq[t] += w * d.g_norm_sq;
                tr.z_norm_sq[t] += w * d.z_norm_sq;
                tr.grad_norm_sq[t] += w * d.grad_norm_sq;
                let bound = 2.0 * d.g_norm_sq + 2.0 * lam2 * d.z_norm_sq;
                tr.identity_checked += 1;
                if d.grad_norm_sq > bound * (1.0 + IDENTITY_REL_TOL) + f64::MIN_POSITIVE {
                    tr.identity_violations += 1;
                }
                tr.max_x_norm = tr.max_x_norm.max(next.x.norm());
                tr.max_z_norm = tr.max_z_norm.max(d.z_norm_sq.sqrt());
            },
        )?;
    }
    Ok(tr)
}

/// Least-squares `c` in `values[T-1] ≈ c log T / sqrt T` over `T in [lo, hi]`.
fn fit_rate_constant(values: &[f64], lo: usize, hi: usize) -> f64 {
    let ts: Vec<f64> = (lo..=hi).map(|t| log_over_sqrt(t as f64)).collect();
    let vs: Vec<f64> = (lo..=hi).map(|t| values[t - 1]).collect();
    fit_through_origin(&ts, &vs)
}

#[derive(Debug, Clone, Serialize)]
pub struct UnperturbedRate {
    /// `c` fitted on `T in [1e2, 1e3]`.
    pub fitted_c: f64,
    /// Max over `T in [1e4, 1e5]` of `avg |G|^2 * sqrt T / log T`.
    pub late_max_statistic: f64,
    pub identity_violations: u64,
    pub identity_checked: u64,
    /// Log-log slope of the seed-averaged `|z_t|^2` over `[1e3, 1e5]`.
    pub z_slope: f64,
}

/// Noisy unperturbed chain at the largest admissible step `1/(L+lambda)`.
pub fn unperturbed_rate(bed: &Testbed, sigma: f64, horizon: u64, n_seeds: u64, seed: u64) -> Result<UnperturbedRate> {
    let obj = bed.objective(sigma)?;
    let sched = ScheduleSpec::esgd(1.0 / (bed.smoothness() + bed.lambda), bed.lambda, bed.alpha);
    let tr = seed_averaged_traces(&obj, &sched, &ParamVec::from(bed.x0), horizon, n_seeds, seed)?;
    let avg = Traces::running_average(&tr.g_norm_sq);
    let c = fit_rate_constant(&avg, 100, 1000);
    let late_max = (10_000..=horizon as usize)
        .map(|t| avg[t - 1] * (t as f64).sqrt() / (t as f64).ln())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(UnperturbedRate {
        fitted_c: c,
        late_max_statistic: late_max,
        identity_violations: tr.identity_violations,
        identity_checked: tr.identity_checked,
        z_slope: anchor_slope(&tr.z_norm_sq, 1_000, horizon as usize),
    })
}

/// Log-log slope of window means of `trace` at 20 log-spaced points in `[lo, hi]`.
pub fn anchor_slope(trace: &[f64], lo: usize, hi: usize) -> f64 {
    let hi = hi.min(trace.len());
    let k = 20;
    let (llo, lhi) = ((lo as f64).ln(), (hi as f64).ln());
    let ts: Vec<f64> = (0..k)
        .map(|i| (llo + (lhi - llo) * i as f64 / (k - 1) as f64).exp().round())
        .collect();
    let ys: Vec<f64> = ts.iter().map(|&t| Traces::window_mean(trace, t as usize)).collect();
    loglog_slope(&ts, &ys)
}

#[derive(Debug, Clone, Serialize)]
pub struct PlateauCase {
    pub rho: f64,
    /// `4 L^2 rho^2`.
    pub neighborhood: f64,
    /// Mean of the seed-averaged `|G_t|^2` over the last 10% of the run.
    pub plateau: f64,
    /// `(1/T) sum |G_t|^2` at the horizon.
    pub final_average: f64,
    /// `c` fitted to the excess over the neighborhood on `[1e2, 1e3]`.
    pub fitted_c: f64,
    /// `neighborhood + 2 c log T / sqrt T` at the horizon.
    pub bound: f64,
    pub identity_violations: u64,
    pub identity_checked: u64,
}

/// Constant-radius perturbed chains, one case per `rho`.
pub fn constant_rho_plateaus(
    bed: &Testbed,
    sigma: f64,
    rhos: &[f64],
    horizon: u64,
    n_seeds: u64,
    seed: u64,
) -> Result<Vec<PlateauCase>> {
    let obj = bed.objective(sigma)?;
    let l = bed.smoothness();
    let mut out = Vec::new();
    for &rho in rhos {
        let sched =
            ScheduleSpec::esgd(1.0 / (4.0 * (l + bed.lambda)), bed.lambda, bed.alpha).with_rho(RhoMode::Constant, rho);
        let tr = seed_averaged_traces(&obj, &sched, &ParamVec::from(bed.x0), horizon, n_seeds, seed)?;
        let avg = Traces::running_average(&tr.g_norm_sq);
        let neighborhood = 4.0 * l * l * rho * rho;
        let excess: Vec<f64> = avg.iter().map(|a| (a - neighborhood).max(0.0)).collect();
        let c = fit_rate_constant(&excess, 100, 1000);
        let t = horizon as usize;
        out.push(PlateauCase {
            rho,
            neighborhood,
            plateau: Traces::window_mean(&tr.g_norm_sq, t),
            final_average: avg[t - 1],
            fitted_c: c,
            bound: neighborhood + 2.0 * c * log_over_sqrt(t as f64),
            identity_violations: tr.identity_violations,
            identity_checked: tr.identity_checked,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct VanishingRun {
    /// `(t, window mean of |G|^2 over [0.9 t, t))` at each decade.
    pub windows: Vec<(u64, f64)>,
    pub tail_mean: f64,
    pub z_slope: f64,
    pub identity_violations: u64,
    pub identity_checked: u64,
}

/// Decaying-radius perturbed chain `rho_t = rho0 / sqrt(t + 1)`.
pub fn decaying_rho_run(
    bed: &Testbed,
    sigma: f64,
    rho0: f64,
    horizon: u64,
    n_seeds: u64,
    seed: u64,
) -> Result<VanishingRun> {
    let obj = bed.objective(sigma)?;
    let l = bed.smoothness();
    let sched =
        ScheduleSpec::esgd(1.0 / (4.0 * (l + bed.lambda)), bed.lambda, bed.alpha).with_rho(RhoMode::Decaying, rho0);
    let tr = seed_averaged_traces(&obj, &sched, &ParamVec::from(bed.x0), horizon, n_seeds, seed)?;
    let mut windows = Vec::new();
    let mut t = 1_000u64;
    while t <= horizon {
        windows.push((t, Traces::window_mean(&tr.g_norm_sq, t as usize)));
        t *= 10;
    }
    Ok(VanishingRun {
        windows,
        tail_mean: Traces::window_mean(&tr.g_norm_sq, horizon as usize),
        z_slope: anchor_slope(&tr.z_norm_sq, 1_000, 100_000),
        identity_violations: tr.identity_violations,
        identity_checked: tr.identity_checked,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PathwiseGap {
    pub rho0: f64,
    /// Confinement radius `R = 2 |x0|`.
    pub radius: f64,
    pub max_x_norm: f64,
    /// `C = L R + |grad f(0)| + sigma sqrt d` with `sigma = 0`.
    pub c_bound: f64,
    /// `max(C / lambda, (C + rho0 L) / lambda)`.
    pub d_bound: f64,
    pub max_z_norm: f64,
    pub identity_violations: u64,
    pub identity_checked: u64,
}

/// Noise-free variant: the anchor gap must stay below `D` at every step.
pub fn pathwise_gap(bed: &Testbed, mode: RhoMode, rho0: f64, horizon: u64) -> Result<PathwiseGap> {
    let obj = bed.objective(0.0)?;
    let l = bed.smoothness();
    let x0 = ParamVec::from(bed.x0);
    let radius = 2.0 * x0.norm();
    let eta0 = if mode == RhoMode::Zero {
        1.0 / (l + bed.lambda)
    } else {
        1.0 / (4.0 * (l + bed.lambda))
    };
    let sched = ScheduleSpec::esgd(eta0, bed.lambda, bed.alpha).with_rho(mode, rho0);
    let tr = seed_averaged_traces(&obj, &sched, &x0, horizon, 1, 0)?;
    let c = obj.confined_grad_bound(radius).expect("quadratic has known L");
    let d = (c / bed.lambda).max((c + rho0 * l) / bed.lambda);
    Ok(PathwiseGap {
        rho0,
        radius,
        max_x_norm: tr.max_x_norm.max(x0.norm()),
        c_bound: c,
        d_bound: d,
        max_z_norm: tr.max_z_norm,
        identity_violations: tr.identity_violations,
        identity_checked: tr.identity_checked,
    })
}
