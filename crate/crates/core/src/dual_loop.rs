//! Single-chain coupled update.
//!
//! ```text
//! x_{t+1} = x_t - eta_t (g_t + lambda (x_t - y_t))
//! y_{t+1} = alpha x_{t+1} + (1 - alpha) y_t
//! ```
//!
//! with `eta_t = eta0 / sqrt(t + 1)`. The gradient `g_t` is a plain stochastic
//! gradient when the perturbation is off, and the single-sample SAM gradient
//! otherwise. Diagnostics always use the exact gradient at `(x_t, y_t)`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscapes::Objective;
use crate::metrics::{should_record, MetricsRecord};
use crate::param::ParamVec;
use crate::rng::SeedStreams;
use crate::sam_map::{sam_stochastic_grad, SamParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoMode {
    Zero,
    Constant,
    Decaying,
}

/// Inner step-size decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EtaDecay {
    /// `eta0 / sqrt(t + 1)`; the schedule the rate guarantees are stated for.
    #[default]
    InvSqrt,
    /// Fixed `eta0`.
    Constant,
    /// Piecewise-constant `eta0 * factor^k` after the k-th milestone.
    Step { milestones: Vec<u64>, factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub eta0: f64,
    pub rho_mode: RhoMode,
    #[serde(default)]
    pub rho0: f64,
    #[serde(rename = "lambda")]
    pub lambda: f64,
    pub alpha: f64,
    #[serde(default)]
    pub eta_decay: EtaDecay,
}

/// The cap that applies to a schedule, with the bound written out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCap {
    pub name: &'static str,
    pub bound: &'static str,
    pub cap: f64,
}

impl ScheduleSpec {
    pub fn esgd(eta0: f64, lambda: f64, alpha: f64) -> Self {
        ScheduleSpec {
            eta0,
            rho_mode: RhoMode::Zero,
            rho0: 0.0,
            lambda,
            alpha,
            eta_decay: EtaDecay::InvSqrt,
        }
    }

    pub fn with_rho(mut self, mode: RhoMode, rho0: f64) -> Self {
        self.rho_mode = mode;
        self.rho0 = rho0;
        self
    }

    pub fn eta_at(&self, t: u64) -> f64 {
        self.eta_decay.apply(self.eta0, t)
    }
}

impl EtaDecay {
    /// Step size at counter `t` for base step `eta0`.
    pub fn apply(&self, eta0: f64, t: u64) -> f64 {
        match self {
            EtaDecay::InvSqrt => eta0 / ((t + 1) as f64).sqrt(),
            EtaDecay::Constant => eta0,
            EtaDecay::Step { milestones, factor } => {
                let passed = milestones.iter().filter(|&&m| t >= m).count();
                eta0 * factor.powi(passed as i32)
            }
        }
    }
}

impl ScheduleSpec {
    pub fn rho_at(&self, t: u64) -> f64 {
        match self.rho_mode {
            RhoMode::Zero => 0.0,
            RhoMode::Constant => self.rho0,
            RhoMode::Decaying => self.rho0 / ((t + 1) as f64).sqrt(),
        }
    }

    fn perturbed(&self) -> bool {
        self.rho_mode != RhoMode::Zero && self.rho0 > 0.0
    }

    /// Cap for smoothness `l`: `1/(L+lambda)` unperturbed, `1/(4(L+lambda))`
    /// with a positive perturbation radius.
    pub fn step_cap(&self, l: f64) -> StepCap {
        if self.perturbed() {
            StepCap {
                name: "perturbed-gradient chain",
                bound: "η₀ ≤ 1/(4(L+λ))",
                cap: 1.0 / (4.0 * (l + self.lambda)),
            }
        } else {
            StepCap {
                name: "unperturbed chain",
                bound: "η₀ ≤ 1/(L+λ)",
                cap: 1.0 / (l + self.lambda),
            }
        }
    }

    /// Range checks plus the step-size cap when the smoothness is known.
    pub fn validate(&self, smoothness: Option<f64>) -> Result<()> {
        if !(self.eta0 > 0.0) || !self.eta0.is_finite() {
            return Err(Error::Config(format!("schedule.eta0 must be > 0, got {}", self.eta0)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!(
                "schedule.lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "schedule.alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.rho0 >= 0.0) || !self.rho0.is_finite() {
            return Err(Error::Config(format!("schedule.rho0 must be >= 0, got {}", self.rho0)));
        }
        if self.rho_mode == RhoMode::Zero && self.rho0 != 0.0 {
            return Err(Error::Config("schedule.rho0 must be 0 when rho_mode = \"zero\"".into()));
        }
        if let EtaDecay::Step { factor, .. } = &self.eta_decay {
            if !(*factor > 0.0 && *factor <= 1.0) {
                return Err(Error::Config(format!(
                    "eta_decay.factor must be in (0, 1], got {factor}"
                )));
            }
        }
        if let Some(l) = smoothness {
            let cap = self.step_cap(l);
            if self.eta0 > cap.cap {
                return Err(Error::StepCap {
                    chain: cap.name,
                    bound: cap.bound,
                    eta0: self.eta0,
                    cap: cap.cap,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub x: ParamVec,
    pub y: ParamVec,
    pub t: u64,
    /// Root of the per-step oracle noise.
    pub rng_seed: u64,
}

impl ChainState {
    pub fn new(x: ParamVec, y: ParamVec, rng_seed: u64) -> Self {
        ChainState { x, y, t: 0, rng_seed }
    }

    pub fn z(&self) -> ParamVec {
        &self.x - &self.y
    }
}

/// Exact-gradient quantities at `(x_t, y_t)`, before the update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: u64,
    pub f_val: f64,
    pub grad_norm_sq: f64,
    /// `|grad f(x_t) + lambda z_t|^2`.
    pub g_norm_sq: f64,
    pub z_norm_sq: f64,
    /// `f(x_t) + lambda/2 |z_t|^2`.
    pub phi: f64,
    pub eta: f64,
    pub rho: f64,
}

impl StepDiagnostics {
    /// Diagnostics of a point `x` coupled to an anchor `y` with strength `lambda`.
    pub fn at(obj: &dyn Objective, x: &ParamVec, y: &ParamVec, lambda: f64) -> Self {
        let grad = obj.grad(x);
        let z = x - y;
        let mut big_g = grad.clone();
        big_g.axpy(lambda, &z);
        let f_val = obj.eval(x);
        let z_norm_sq = z.norm_sq();
        StepDiagnostics {
            t: 0,
            f_val,
            grad_norm_sq: grad.norm_sq(),
            g_norm_sq: big_g.norm_sq(),
            z_norm_sq,
            phi: f_val + 0.5 * lambda * z_norm_sq,
            eta: 0.0,
            rho: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.f_val, self.grad_norm_sq, self.g_norm_sq, self.z_norm_sq, self.phi]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn to_record(&self, wall_ns: u64, sync_flag: bool, worker_id: i64) -> MetricsRecord {
        MetricsRecord {
            t: self.t,
            wall_ns,
            f_val: self.f_val,
            grad_norm_sq: self.grad_norm_sq,
            g_norm_sq: self.g_norm_sq,
            z_norm_sq: self.z_norm_sq,
            phi: self.phi,
            sync_flag,
            worker_id,
        }
    }
}

/// Gradient used by the update at step `t` (stochastic, possibly SAM).
pub fn update_gradient(obj: &dyn Objective, sched: &ScheduleSpec, sam: &SamParams, state: &ChainState) -> ParamVec {
    let noise = SeedStreams::new(state.rng_seed).noise(state.t);
    let rho = sched.rho_at(state.t);
    if rho == 0.0 {
        obj.stochastic_grad(&state.x, noise)
    } else {
        sam_stochastic_grad(obj, &sam.with_rho(rho), &state.x, noise)
    }
}

/// One transition. `sam` supplies the stabilizer; the radius comes from the
/// schedule. Caps are checked on every call.
pub fn step(
    obj: &dyn Objective,
    sched: &ScheduleSpec,
    sam: &SamParams,
    state: ChainState,
) -> Result<(ChainState, StepDiagnostics)> {
    sched.validate(obj.smoothness())?;
    Error::check_dim(obj.dim(), &state.x)?;
    Error::check_dim(obj.dim(), &state.y)?;
    Ok(step_unchecked(obj, sched, sam, state))
}

fn step_unchecked(
    obj: &dyn Objective,
    sched: &ScheduleSpec,
    sam: &SamParams,
    state: ChainState,
) -> (ChainState, StepDiagnostics) {
    let eta = sched.eta_at(state.t);
    let mut diag = StepDiagnostics::at(obj, &state.x, &state.y, sched.lambda);
    diag.t = state.t;
    diag.eta = eta;
    diag.rho = sched.rho_at(state.t);

    let mut drive = update_gradient(obj, sched, sam, &state);
    let ChainState {
        mut x,
        mut y,
        t,
        rng_seed,
    } = state;
    drive.axpy(sched.lambda, &(&x - &y));
    x.axpy(-eta, &drive);
    y.scale(1.0 - sched.alpha);
    y.axpy(sched.alpha, &x);
    (
        ChainState {
            x,
            y,
            t: t + 1,
            rng_seed,
        },
        diag,
    )
}

/// Running averages over every step of a chain (not only recorded ones).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSummary {
    pub steps: u64,
    pub mean_g_norm_sq: f64,
    pub mean_grad_norm_sq: f64,
    pub mean_z_norm_sq: f64,
    pub final_diagnostics: StepDiagnostics,
}

#[derive(Debug, Clone)]
pub struct ChainRun {
    pub records: Vec<MetricsRecord>,
    pub summary: ChainSummary,
    pub final_state: ChainState,
}

/// Run `horizon` steps, handing every step's diagnostics to `observer`.
/// On a non-finite state the run stops with the last finite diagnostics.
#[allow(clippy::too_many_arguments)]
pub fn run_chain_observed<F>(
    obj: &dyn Objective,
    sched: &ScheduleSpec,
    sam: &SamParams,
    x0: ParamVec,
    y0: ParamVec,
    horizon: u64,
    seed: u64,
    mut observer: F,
) -> Result<(ChainSummary, ChainState)>
where
    F: FnMut(&StepDiagnostics, &ChainState),
{
    if horizon == 0 {
        return Err(Error::Config("horizon must be >= 1".into()));
    }
    sched.validate(obj.smoothness())?;
    Error::check_dim(obj.dim(), &x0)?;
    Error::check_dim(obj.dim(), &y0)?;

    let mut state = ChainState::new(x0, y0, seed);
    let (mut sum_g, mut sum_grad, mut sum_z) = (0.0, 0.0, 0.0);
    let mut last_good: Option<StepDiagnostics> = None;
    for _ in 0..horizon {
        let (next, diag) = step_unchecked(obj, sched, sam, state);
        if !diag.is_finite() {
            return Err(Error::NumericAbort {
                step: diag.t as usize,
                last_good: last_good.map(Box::new),
            });
        }
        observer(&diag, &next);
        sum_g += diag.g_norm_sq;
        sum_grad += diag.grad_norm_sq;
        sum_z += diag.z_norm_sq;
        if !next.x.is_finite() || !next.y.is_finite() {
            return Err(Error::NumericAbort {
                step: next.t as usize,
                last_good: Some(Box::new(diag)),
            });
        }
        last_good = Some(diag);
        state = next;
    }
    let n = horizon as f64;
    Ok((
        ChainSummary {
            steps: horizon,
            mean_g_norm_sq: sum_g / n,
            mean_grad_norm_sq: sum_grad / n,
            mean_z_norm_sq: sum_z / n,
            final_diagnostics: last_good.expect("horizon >= 1"),
        },
        state,
    ))
}

/// Run a chain and keep downsampled metrics rows. `wall_clock = false`
/// writes zero timestamps so repeated runs produce identical records.
#[allow(clippy::too_many_arguments)]
pub fn run_chain(
    obj: &dyn Objective,
    sched: &ScheduleSpec,
    sam: &SamParams,
    x0: ParamVec,
    y0: ParamVec,
    horizon: u64,
    seed: u64,
    wall_clock: bool,
) -> Result<ChainRun> {
    let start = Instant::now();
    let mut records = Vec::new();
    let (summary, final_state) = run_chain_observed(obj, sched, sam, x0, y0, horizon, seed, |d, _| {
        if should_record(d.t, false) {
            let wall = if wall_clock {
                start.elapsed().as_nanos() as u64
            } else {
                0
            };
            records.push(d.to_record(wall, false, -1));
        }
    })?;
    Ok(ChainRun {
        records,
        summary,
        final_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::make_quadratic;

    #[test]
    fn one_step_gradient_descent() {
        let q = make_quadratic(2, ParamVec::from([1.0, 1.0]), 0.0).unwrap();
        let sched = ScheduleSpec::esgd(0.5, 0.0, 1.0);
        let s = ChainState::new(ParamVec::from([1.0, 0.0]), ParamVec::from([1.0, 0.0]), 0);
        let (next, _) = step(&q, &sched, &SamParams::off(2), s).unwrap();
        assert_eq!(next.x, ParamVec::from([0.5, 0.0]));
        assert_eq!(next.t, 1);
    }

    #[test]
    fn alpha_one_closes_gap() {
        let q = make_quadratic(2, ParamVec::from([1.0, 2.0]), 0.3).unwrap();
        let sched = ScheduleSpec::esgd(0.2, 0.5, 1.0);
        let s = ChainState::new(ParamVec::from([1.0, -2.0]), ParamVec::from([0.0, 3.0]), 5);
        let (next, _) = step(&q, &sched, &SamParams::off(2), s).unwrap();
        assert_eq!(next.x, next.y);
    }

    #[test]
    fn cap_names_the_bound() {
        let q = make_quadratic(2, ParamVec::from([1.0, 1.0]), 0.0).unwrap();
        let sched = ScheduleSpec::esgd(0.2, 1.0, 0.5).with_rho(RhoMode::Constant, 0.1);
        let err = sched.validate(q.smoothness()).unwrap_err().to_string();
        assert!(err.contains("η₀ ≤ 1/(4(L+λ))"), "{err}");
        assert!(ScheduleSpec::esgd(0.5, 1.0, 0.5).validate(Some(1.0)).is_ok());
        assert!(ScheduleSpec::esgd(0.51, 1.0, 0.5).validate(Some(1.0)).is_err());
    }

    #[test]
    fn step_decay_schedule() {
        let mut s = ScheduleSpec::esgd(1.0, 0.0, 1.0);
        s.eta_decay = EtaDecay::Step {
            milestones: vec![10, 20],
            factor: 0.1,
        };
        assert_eq!(s.eta_at(9), 1.0);
        assert!((s.eta_at(10) - 0.1).abs() < 1e-15);
        assert!((s.eta_at(25) - 0.01).abs() < 1e-15);
    }
}
