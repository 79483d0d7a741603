use crate::error::{Error, Result};
use crate::landscapes::Objective;
use crate::param::ParamVec;
use crate::quadrature::{QuadratureGrid, DEFAULT_LOG_GUARD};
use crate::sam_map::{sam_log_density_unnormalized, SamParams};

use super::KernelSpec;

/// Kernel-smoothed SAM density tabulated on an integration grid:
///
/// `pi(y) = int exp(-f(T(x)) - phi(x - y)) dx / (Z_{rho,gamma} Z_k)`
///
/// The SAM log-density is evaluated once per grid node and reused for every
/// query point `y`.
pub struct LsamDensity<'a> {
    kernel: &'a KernelSpec,
    grid: QuadratureGrid,
    nodes: Vec<ParamVec>,
    log_sam: Vec<f64>,
    log_z_sam: f64,
    log_z_kernel: f64,
}

impl<'a> LsamDensity<'a> {
    pub fn new(obj: &dyn Objective, p: &SamParams, kernel: &'a KernelSpec, grid: &QuadratureGrid) -> Result<Self> {
        kernel.ensure_admissible()?;
        if !(1..=2).contains(&obj.dim()) || obj.dim() != grid.dim() || kernel.dim() != obj.dim() {
            return Err(Error::Config(format!(
                "smoothed density needs dim 1 or 2 with matching grid and kernel (objective {}, grid {}, kernel {})",
                obj.dim(),
                grid.dim(),
                kernel.dim()
            )));
        }
        let nodes = grid.points();
        let log_sam: Vec<f64> = nodes.iter().map(|x| sam_log_density_unnormalized(obj, p, x)).collect();
        let z_sam = grid.integrate_log_values(&log_sam, DEFAULT_LOG_GUARD)?;
        let z_kernel = kernel.normalizer()?;
        Ok(LsamDensity {
            kernel,
            grid: *grid,
            nodes,
            log_sam,
            log_z_sam: z_sam.log_value,
            log_z_kernel: z_kernel.ln(),
        })
    }

    /// `log Z_{rho,gamma}` on the integration grid.
    pub fn log_z_sam(&self) -> f64 {
        self.log_z_sam
    }

    pub fn log_density(&self, y: &ParamVec) -> Result<f64> {
        Error::check_dim(self.kernel.dim(), y)?;
        let mut z = ParamVec::zeros(y.len());
        let values: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.log_sam)
            .map(|(x, ls)| {
                for i in 0..z.len() {
                    z[i] = x[i] - y[i];
                }
                ls - self.kernel.phi(&z)
            })
            .collect();
        let log_i = self.grid.integrate_log_values(&values, DEFAULT_LOG_GUARD)?.log_value;
        Ok(log_i - self.log_z_sam - self.log_z_kernel)
    }

    pub fn density(&self, y: &ParamVec) -> Result<f64> {
        Ok(self.log_density(y)?.exp())
    }
}

/// `pi_LSAM(y)` by quadrature over `grid` (dimension 1 or 2).
pub fn lsam_density_quadrature(
    obj: &dyn Objective,
    p: &SamParams,
    kern: &KernelSpec,
    y: &ParamVec,
    grid: &QuadratureGrid,
) -> Result<f64> {
    LsamDensity::new(obj, p, kern, grid)?.density(y)
}
