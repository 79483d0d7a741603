//! Stabilized SAM perturbation, surrogate loss, and Boltzmann density.
//!
//! The look-back map is `T(x) = x + rho * grad f(x) / (|grad f(x)| + gamma)`.
//! Its shift never exceeds `rho`, and `gamma > 0` keeps it defined at
//! critical points. With `rho = 0` every function here returns exactly what
//! the plain objective would.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscapes::Objective;
use crate::param::ParamVec;
use crate::quadrature::{Integral, QuadratureGrid};
use crate::rng::NoiseSeed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamParams {
    pub rho: f64,
    pub gamma: f64,
}

/// Dimension-aware stabilizer `1e-12 * sqrt(d) + 1e-8`.
pub fn default_gamma(dim: usize) -> f64 {
    1e-12 * (dim as f64).sqrt() + 1e-8
}

impl SamParams {
    pub fn new(rho: f64, gamma: f64) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::Config(format!("rho must be >= 0, got {rho}")));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Config(format!("gamma must be > 0, got {gamma}")));
        }
        Ok(SamParams { rho, gamma })
    }

    pub fn with_default_gamma(rho: f64, dim: usize) -> Result<Self> {
        SamParams::new(rho, default_gamma(dim))
    }

    /// `rho = 0`: all SAM quantities reduce to plain ones.
    pub fn off(dim: usize) -> Self {
        SamParams {
            rho: 0.0,
            gamma: default_gamma(dim),
        }
    }

    pub fn with_rho(self, rho: f64) -> Self {
        SamParams { rho, ..self }
    }
}

/// `rho * g / (|g| + gamma)` for a given gradient `g`.
pub fn perturbation(p: &SamParams, g: &ParamVec) -> ParamVec {
    g.scaled(p.rho / (g.norm() + p.gamma))
}

/// `T(x)`, the point at which SAM evaluates the loss.
pub fn lookback_map(obj: &dyn Objective, p: &SamParams, x: &ParamVec) -> ParamVec {
    if p.rho == 0.0 {
        return x.clone();
    }
    let g = obj.grad(x);
    x + &perturbation(p, &g)
}

/// `f(T(x))`.
pub fn sam_loss(obj: &dyn Objective, p: &SamParams, x: &ParamVec) -> f64 {
    obj.eval(&lookback_map(obj, p, x))
}

/// Single-sample SAM gradient: the perturbation direction and the outer
/// gradient share the noise realization `noise`.
pub fn sam_stochastic_grad(obj: &dyn Objective, p: &SamParams, x: &ParamVec, noise: NoiseSeed) -> ParamVec {
    let g = obj.stochastic_grad(x, noise);
    if p.rho == 0.0 {
        return g;
    }
    let shifted = x + &perturbation(p, &g);
    obj.stochastic_grad(&shifted, noise)
}

/// Exact-gradient SAM direction `grad f(T(x))` (no Jacobian of `T`).
pub fn sam_grad(obj: &dyn Objective, p: &SamParams, x: &ParamVec) -> ParamVec {
    if p.rho == 0.0 {
        return obj.grad(x);
    }
    obj.grad(&lookback_map(obj, p, x))
}

pub fn sam_log_density_unnormalized(obj: &dyn Objective, p: &SamParams, x: &ParamVec) -> f64 {
    -sam_loss(obj, p, x)
}

/// `exp(-f(T(x)))`.
pub fn sam_density_unnormalized(obj: &dyn Objective, p: &SamParams, x: &ParamVec) -> f64 {
    sam_log_density_unnormalized(obj, p, x).exp()
}

/// Partition function `Z_{rho,gamma}` by trapezoidal quadrature. Only for
/// objectives of dimension 1 or 2, on a grid of matching dimension.
pub fn sam_partition_1d2d(obj: &dyn Objective, p: &SamParams, grid: &QuadratureGrid) -> Result<Integral> {
    if obj.dim() > 2 || obj.dim() != grid.dim() {
        return Err(Error::Config(format!(
            "partition quadrature needs dim 1 or 2 matching the grid, got objective dim {} and grid dim {}",
            obj.dim(),
            grid.dim()
        )));
    }
    grid.integrate_log(|x| sam_log_density_unnormalized(obj, p, x))
}

/// Shift magnitude `rho |g| / (|g| + gamma)` as a function of `|g|`.
pub fn shift_norm(p: &SamParams, grad_norm: f64) -> f64 {
    p.rho * grad_norm / (grad_norm + p.gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::{make_double_well, make_quadratic};

    #[test]
    fn zero_gradient_is_fixed_point() {
        let q = make_quadratic(2, ParamVec::from([1.0, 1.0]), 0.0).unwrap();
        let p = SamParams::new(0.1, 0.01).unwrap();
        assert_eq!(lookback_map(&q, &p, &ParamVec::zeros(2)), ParamVec::zeros(2));
        assert_eq!(sam_loss(&q, &p, &ParamVec::zeros(2)), 0.0);
    }

    #[test]
    fn lookback_example_value() {
        let q = make_quadratic(2, ParamVec::from([1.0, 1.0]), 0.0).unwrap();
        let p = SamParams::new(0.1, 0.01).unwrap();
        let t = lookback_map(&q, &p, &ParamVec::from([1.0, 0.0]));
        assert!((t[0] - (1.0 + 0.1 / 1.01)).abs() < 1e-15);
        assert_eq!(t[1], 0.0);
        let l = sam_loss(&q, &p, &ParamVec::from([1.0, 0.0]));
        assert!((l - 0.5 * (1.0 + 0.1 / 1.01f64).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(SamParams::new(-0.1, 1e-8).is_err());
        assert!(SamParams::new(0.1, 0.0).is_err());
        assert!(SamParams::new(0.0, 1e-8).is_ok());
    }

    #[test]
    fn partition_rejects_dimension_mismatch() {
        let q = make_quadratic(2, ParamVec::from([1.0, 1.0]), 0.0).unwrap();
        let grid = QuadratureGrid::line(-5.0, 5.0, 101).unwrap();
        assert!(sam_partition_1d2d(&q, &SamParams::off(2), &grid).is_err());
    }

    #[test]
    fn double_well_partition_is_finite_and_positive() {
        let dw = make_double_well(0.0).unwrap();
        let grid = QuadratureGrid::line(-4.0, 4.0, 8001).unwrap();
        let z = sam_partition_1d2d(&dw, &SamParams::new(0.05, 1e-8).unwrap(), &grid).unwrap();
        assert!(z.value > 0.0 && z.value.is_finite());
        assert!(z.edge_ratio < 1e-8);
    }
}
