//! Gradient correctness of every shipped objective and normalization of the
//! SAM and smoothed densities in one dimension.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::kernel_smoothing::{gaussian_kernel, LsamDensity};
use crate::landscapes::{make_basin_landscape, make_double_well, make_mlp_regression, make_quadratic, Objective};
use crate::param::ParamVec;
use crate::quadrature::{Axis, QuadratureGrid};
use crate::rng::SeedStreams;
use crate::sam_map::{sam_partition_1d2d, SamParams};

use super::super::oracles::{fd_gradient, relative_error};
use super::{Outcome, VerifyOptions};

pub const GRADIENT_POINTS: usize = 20;
pub const GRADIENT_TOL: f64 = 1e-5;
pub const DENSITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct GradientCase {
    pub objective: String,
    pub points: usize,
    pub max_rel_error: f64,
}

/// Worst relative error between analytic and central-difference gradients
/// at random points in `[-half_width, half_width]^d`.
pub fn gradient_errors(obj: &dyn Objective, half_width: f64, points: usize, seed: u64) -> GradientCase {
    let mut rng = SeedStreams::new(seed).rng("gradient-probe", 0);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x = ParamVec::from_vec(
            (0..obj.dim())
                .map(|_| rng.random_range(-half_width..half_width))
                .collect(),
        );
        let err = relative_error(&obj.grad(&x), &fd_gradient(obj, &x, 1e-5), 1e-6);
        worst = worst.max(err);
    }
    GradientCase {
        objective: obj.name().to_string(),
        points,
        max_rel_error: worst,
    }
}

pub fn gradient_criterion(opts: &VerifyOptions) -> Result<Outcome> {
    let quad = make_quadratic(3, ParamVec::from([1.0, 0.5, 2.5]), 0.0)?;
    let well = make_double_well(0.0)?;
    let basin = make_basin_landscape(opts.seed as i64);
    let mlp = make_mlp_regression(8, 64, opts.seed as i64)?;
    let cases = vec![
        gradient_errors(&quad, 3.0, GRADIENT_POINTS, opts.seed),
        gradient_errors(&well, 2.0, GRADIENT_POINTS, opts.seed),
        gradient_errors(&basin, 5.0, GRADIENT_POINTS, opts.seed),
        gradient_errors(&mlp, mlp.probe_box(), GRADIENT_POINTS, opts.seed),
    ];
    let passed = cases.iter().all(|c| c.max_rel_error < GRADIENT_TOL);
    let detail = cases
        .iter()
        .map(|c| format!("{} {:.2e}", c.objective, c.max_rel_error))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome {
        name: "gradient-fd",
        passed,
        detail: format!("max rel err [{detail}] < 1e-5"),
        measurements: serde_json::to_value(&cases)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityCase {
    pub objective: String,
    pub rho: f64,
    /// `None` for the unsmoothed SAM density.
    pub kernel_scale: Option<f64>,
    pub integral: f64,
    pub z_sam: f64,
    pub z0: f64,
}

/// `int pi_SAM`: normalized with `Z` from one grid, integrated on a second,
/// wider grid with a different spacing.
pub fn sam_density_integral(obj: &dyn Objective, p: &SamParams) -> Result<(f64, f64)> {
    let norm_grid = QuadratureGrid::D1(Axis::with_spacing(-6.0, 6.0, 2.5e-5)?);
    let check_grid = QuadratureGrid::D1(Axis::new(-7.0, 7.0, 1_400_001)?);
    let z = sam_partition_1d2d(obj, p, &norm_grid)?.value;
    let log_z = z.ln();
    let integral = check_grid
        .integrate_log(|x| crate::sam_map::sam_log_density_unnormalized(obj, p, x) - log_z)?
        .value;
    Ok((integral, z))
}

/// `int pi_LSAM(y) dy` on a `y` grid, each value itself a quadrature over `x`.
pub fn lsam_density_integral(obj: &dyn Objective, p: &SamParams, s: f64) -> Result<f64> {
    let kern = gaussian_kernel(s, 1)?;
    let x_grid = QuadratureGrid::D1(Axis::with_spacing(-6.0, 6.0, 2e-3)?);
    let dens = LsamDensity::new(obj, p, &kern, &x_grid)?;
    let reach = 6.0 + s * 120f64.sqrt();
    let y_grid = QuadratureGrid::D1(Axis::with_spacing(-reach, reach, 1e-2)?);
    Ok(y_grid
        .integrate_log(|y| dens.log_density(y).unwrap_or(f64::NEG_INFINITY))?
        .value)
}

pub fn density_cases() -> Result<Vec<DensityCase>> {
    let quad = make_quadratic(1, ParamVec::from([1.0]), 0.0)?;
    let well = make_double_well(0.0)?;
    let objectives: [&dyn Objective; 2] = [&quad, &well];
    let mut out = Vec::new();
    for obj in objectives {
        let z0 = sam_density_integral(obj, &SamParams::off(1))?.1;
        for rho in [0.0, 0.05] {
            let p = SamParams::with_default_gamma(rho, 1)?;
            let (integral, z_sam) = sam_density_integral(obj, &p)?;
            out.push(DensityCase {
                objective: obj.name().to_string(),
                rho,
                kernel_scale: None,
                integral,
                z_sam,
                z0,
            });
            for s in [0.5, 1.0] {
                out.push(DensityCase {
                    objective: obj.name().to_string(),
                    rho,
                    kernel_scale: Some(s),
                    integral: lsam_density_integral(obj, &p, s)?,
                    z_sam,
                    z0,
                });
            }
        }
    }
    Ok(out)
}

pub fn density_criterion() -> Result<Outcome> {
    let cases = density_cases()?;
    let worst = cases.iter().map(|c| (c.integral - 1.0).abs()).fold(0.0, f64::max);
    // Convex case only: the quadratic.
    let convex: Vec<&DensityCase> = cases
        .iter()
        .filter(|c| c.objective == "quadratic" && c.kernel_scale.is_none() && c.rho > 0.0)
        .collect();
    let z_ok = !convex.is_empty() && convex.iter().all(|c| c.z_sam <= c.z0);
    let exact_z0 = (2.0 * std::f64::consts::PI).sqrt();
    let z0_quad = cases
        .iter()
        .find(|c| c.objective == "quadratic")
        .map(|c| c.z0)
        .unwrap_or(f64::NAN);
    let z0_ok = (z0_quad - exact_z0).abs() < DENSITY_TOL;
    let zs: Vec<String> = convex
        .iter()
        .map(|c| format!("{:.6} <= {:.6}", c.z_sam, c.z0))
        .collect();
    Ok(Outcome {
        name: "density-normalization",
        passed: worst < DENSITY_TOL && z_ok && z0_ok,
        detail: format!(
            "{} cases, max |int - 1| = {:.2e} < 1e-6; convex Z_rho {} ; Z_0 vs sqrt(2 pi) err {:.1e}",
            cases.len(),
            worst,
            zs.join(", "),
            (z0_quad - exact_z0).abs()
        ),
        measurements: serde_json::to_value(&cases)?,
    })
}
