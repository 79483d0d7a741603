//! Stationary kernels `k(x, y) = phi(x - y)`, the kernel-smoothed SAM density,
//! and score estimation through conditional sampling.

mod density;
mod sampler;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param::ParamVec;
use crate::quadrature::{Axis, QuadratureGrid};

pub use density::{lsam_density_quadrature, LsamDensity};
pub use sampler::{
    sample_conditional, score_via_conditional, ConditionalSamplerConfig, SampleRun, SamplerHealth, SamplerMethod,
    ScoreEstimate, DEFAULT_CONFINEMENT_RADIUS,
};

/// Tail growth guarantee of `phi`; anything but `None` makes `exp(-phi)`
/// integrable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailClass {
    /// `phi(z) >= c |z|^a` for large `|z|`.
    PolyExpGrowth,
    /// `phi(z) >= (d + eps) log(1 + |z|)` for large `|z|`.
    SuperLogGrowth,
    None,
}

type PhiFn = Arc<dyn Fn(&ParamVec) -> f64 + Send + Sync>;
type GradPhiFn = Arc<dyn Fn(&ParamVec) -> ParamVec + Send + Sync>;

#[derive(Clone)]
pub enum KernelFamily {
    Gaussian { scale: f64 },
    ExpPower { lambda: f64, alpha: f64 },
    Custom { phi: PhiFn, grad_phi: GradPhiFn },
}

impl fmt::Debug for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Gaussian { scale } => f.debug_struct("Gaussian").field("scale", scale).finish(),
            KernelFamily::ExpPower { lambda, alpha } => f
                .debug_struct("ExpPower")
                .field("lambda", lambda)
                .field("alpha", alpha)
                .finish(),
            KernelFamily::Custom { .. } => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelSpec {
    dim: usize,
    family: KernelFamily,
    tail_class: TailClass,
    normalizer_z: Option<f64>,
}

/// Gaussian kernel `phi(z) = |z|^2 / (2 s^2)`.
pub fn gaussian_kernel(s: f64, dim: usize) -> Result<KernelSpec> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Config(format!("kernel scale must be > 0, got {s}")));
    }
    Ok(KernelSpec {
        dim,
        family: KernelFamily::Gaussian { scale: s },
        tail_class: TailClass::PolyExpGrowth,
        normalizer_z: Some((2.0 * std::f64::consts::PI * s * s).powf(dim as f64 / 2.0)),
    })
}

/// Exponential-power kernel `phi(z) = lambda |z|^alpha`. The normalizer is
/// left unknown and obtained by quadrature when needed.
pub fn exp_power_kernel(lambda: f64, alpha: f64, dim: usize) -> Result<KernelSpec> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Config(format!("exp-power alpha must be > 0, got {alpha}")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("exp-power lambda must be > 0, got {lambda}")));
    }
    Ok(KernelSpec {
        dim,
        family: KernelFamily::ExpPower { lambda, alpha },
        tail_class: TailClass::PolyExpGrowth,
        normalizer_z: None,
    })
}

impl KernelSpec {
    /// Arbitrary stationary kernel with a caller-declared tail class.
    pub fn custom<P, G>(dim: usize, phi: P, grad_phi: G, tail_class: TailClass, normalizer_z: Option<f64>) -> Self
    where
        P: Fn(&ParamVec) -> f64 + Send + Sync + 'static,
        G: Fn(&ParamVec) -> ParamVec + Send + Sync + 'static,
    {
        KernelSpec {
            dim,
            family: KernelFamily::Custom {
                phi: Arc::new(phi),
                grad_phi: Arc::new(grad_phi),
            },
            tail_class,
            normalizer_z,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn tail_class(&self) -> TailClass {
        self.tail_class
    }

    /// Closed-form normalizer, when known.
    pub fn normalizer_z(&self) -> Option<f64> {
        self.normalizer_z
    }

    pub fn gaussian_scale(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Gaussian { scale } => Some(scale),
            _ => None,
        }
    }

    pub fn phi(&self, z: &ParamVec) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { scale } => z.norm_sq() / (2.0 * scale * scale),
            KernelFamily::ExpPower { lambda, alpha } => lambda * z.norm().powf(*alpha),
            KernelFamily::Custom { phi, .. } => phi(z),
        }
    }

    pub fn grad_phi(&self, z: &ParamVec) -> ParamVec {
        match &self.family {
            KernelFamily::Gaussian { scale } => z.scaled(1.0 / (scale * scale)),
            KernelFamily::ExpPower { lambda, alpha } => {
                let r = z.norm();
                if r == 0.0 {
                    ParamVec::zeros(z.len())
                } else {
                    z.scaled(lambda * alpha * r.powf(alpha - 2.0))
                }
            }
            KernelFamily::Custom { grad_phi, .. } => grad_phi(z),
        }
    }

    /// `k(x, y) = phi(x - y)`.
    pub fn k(&self, x: &ParamVec, y: &ParamVec) -> f64 {
        self.phi(&(x - y))
    }

    /// `grad_x k(x, y) = grad phi(x - y)`.
    pub fn grad_x(&self, x: &ParamVec, y: &ParamVec) -> ParamVec {
        self.grad_phi(&(x - y))
    }

    /// `grad_y k(x, y) = -grad phi(x - y)`.
    pub fn grad_y(&self, x: &ParamVec, y: &ParamVec) -> ParamVec {
        -self.grad_phi(&(x - y))
    }

    /// Kernels without a tail guarantee cannot define a density.
    pub fn ensure_admissible(&self) -> Result<()> {
        match self.tail_class {
            TailClass::None => Err(Error::KernelRejected(
                "kernel has no tail-growth guarantee; exp(-phi) may not be integrable".into(),
            )),
            _ => Ok(()),
        }
    }

    /// `Z = int exp(-phi(z)) dz`, closed form when known and otherwise by
    /// quadrature (dimension 1 or 2 only).
    pub fn normalizer(&self) -> Result<f64> {
        if let Some(z) = self.normalizer_z {
            return Ok(z);
        }
        self.ensure_admissible()?;
        let radius = self.support_radius()?;
        let grid = match self.dim {
            1 => QuadratureGrid::D1(Axis::new(-radius, radius, 40_001)?),
            2 => {
                let a = Axis::new(-radius, radius, 1_601)?;
                QuadratureGrid::D2(a, a)
            }
            d => {
                return Err(Error::Config(format!(
                    "kernel normalizer by quadrature needs dim <= 2, got {d}"
                )))
            }
        };
        self.normalizer_on(&grid)
    }

    /// Quadrature of `exp(-phi)` on a caller-supplied grid.
    pub fn normalizer_on(&self, grid: &QuadratureGrid) -> Result<f64> {
        Ok(grid.integrate_log(|z| -self.phi(z))?.value)
    }

    fn support_radius(&self) -> Result<f64> {
        // Radius where phi reaches 60 along an axis, i.e. exp(-phi) < 1e-26.
        match &self.family {
            KernelFamily::Gaussian { scale } => Ok(scale * 120f64.sqrt()),
            KernelFamily::ExpPower { lambda, alpha } => Ok((60.0 / lambda).powf(1.0 / alpha)),
            KernelFamily::Custom { .. } => {
                let mut r = 1.0;
                let mut e = ParamVec::zeros(self.dim);
                while r < 1e6 {
                    e[0] = r;
                    if self.phi(&e) >= 60.0 {
                        return Ok(r);
                    }
                    r *= 2.0;
                }
                Err(Error::KernelRejected("phi does not reach 60 within radius 1e6".into()))
            }
        }
    }

    /// Score estimate `mean_i grad phi(x_i - y)`, which equals
    /// `-E[grad_y k(x, y)]`. For the Gaussian kernel this is computed as
    /// `(mean(x) - y) / s^2`.
    pub fn score_from_samples(&self, samples: &[ParamVec], y: &ParamVec) -> ParamVec {
        assert!(!samples.is_empty(), "score needs at least one sample");
        let n = samples.len() as f64;
        match self.family {
            KernelFamily::Gaussian { scale } => {
                let mean = sample_mean(samples);
                (&mean - y).scaled(1.0 / (scale * scale))
            }
            _ => {
                let mut acc = ParamVec::zeros(y.len());
                for x in samples {
                    acc += &self.grad_phi(&(x - y));
                }
                acc.scaled(1.0 / n)
            }
        }
    }
}

pub fn sample_mean(samples: &[ParamVec]) -> ParamVec {
    let mut acc = ParamVec::zeros(samples[0].len());
    for x in samples {
        acc += x;
    }
    acc.scaled(1.0 / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_basics() {
        let k = gaussian_kernel(1.0, 1).unwrap();
        assert_eq!(k.phi(&ParamVec::zeros(1)), 0.0);
        assert!((k.normalizer_z().unwrap() - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert_eq!(k.tail_class(), TailClass::PolyExpGrowth);
        assert!(gaussian_kernel(0.0, 1).is_err());
    }

    #[test]
    fn exp_power_validation() {
        assert!(exp_power_kernel(1.0, 0.0, 1).is_err());
        assert!(exp_power_kernel(1.0, -1.0, 1).is_err());
        assert!(exp_power_kernel(0.0, 2.0, 1).is_err());
        assert_eq!(exp_power_kernel(1.0, 2.0, 1).unwrap().normalizer_z(), None);
    }

    #[test]
    fn grad_y_is_negated_grad_x() {
        let k = gaussian_kernel(0.7, 2).unwrap();
        let x = ParamVec::from([0.3, -1.0]);
        let y = ParamVec::from([1.0, 0.5]);
        assert_eq!(k.grad_y(&x, &y), -k.grad_x(&x, &y));
    }

    #[test]
    fn custom_kernel_without_tail_is_rejected() {
        let k = KernelSpec::custom(
            1,
            |z: &ParamVec| (1.0 + z.norm()).ln(),
            |z: &ParamVec| z.scaled(1.0 / (z.norm().max(1e-300) * (1.0 + z.norm()))),
            TailClass::None,
            None,
        );
        assert!(matches!(k.ensure_admissible(), Err(Error::KernelRejected(_))));
        assert!(k.normalizer().is_err());
    }
}
