use crate::error::{Error, Result};
use crate::param::ParamVec;
use crate::rng::NoiseSeed;

use super::{gaussian_gradient_noise, BasinLabel, Minimum, Objective, ObjectiveConstants};

/// Diagonal quadratic `f(x) = 1/2 sum_i h_i x_i^2` with additive Gaussian
/// gradient noise.
#[derive(Debug, Clone)]
pub struct Quadratic {
    hessian_diag: ParamVec,
    constants: ObjectiveConstants,
}

pub fn make_quadratic(dim: usize, hessian_diag: ParamVec, noise_sigma: f64) -> Result<Quadratic> {
    if dim == 0 {
        return Err(Error::Config("quadratic dimension must be positive".into()));
    }
    Error::check_dim(dim, &hessian_diag)?;
    if let Some((i, h)) = hessian_diag
        .iter()
        .enumerate()
        .find(|(_, h)| !(**h > 0.0) || !h.is_finite())
    {
        return Err(Error::Config(format!(
            "quadratic curvature must be positive, hessian_diag[{i}] = {h}"
        )));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::Config(format!("noise_sigma must be >= 0, got {noise_sigma}")));
    }
    let l = hessian_diag.iter().cloned().fold(0.0, f64::max);
    Ok(Quadratic {
        constants: ObjectiveConstants {
            dim,
            smoothness_l: Some(l),
            noise_sigma,
            grad_norm_c: None,
            minima: vec![Minimum {
                location: ParamVec::zeros(dim),
                label: BasinLabel::WideDeep,
            }],
        },
        hessian_diag,
    })
}

impl Quadratic {
    pub fn hessian_diag(&self) -> &ParamVec {
        &self.hessian_diag
    }
}

impl Objective for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn constants(&self) -> &ObjectiveConstants {
        &self.constants
    }

    fn eval(&self, x: &ParamVec) -> f64 {
        0.5 * self
            .hessian_diag
            .iter()
            .zip(x.iter())
            .map(|(h, v)| h * v * v)
            .sum::<f64>()
    }

    fn grad(&self, x: &ParamVec) -> ParamVec {
        self.hessian_diag.hadamard(x)
    }

    fn stochastic_grad(&self, x: &ParamVec, noise: NoiseSeed) -> ParamVec {
        let mut g = self.grad(x);
        if self.constants.noise_sigma > 0.0 {
            g += &gaussian_gradient_noise(self.constants.dim, self.constants.noise_sigma, noise);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_grad_examples() {
        let q = make_quadratic(2, ParamVec::from([1.0, 1.0]), 0.0).unwrap();
        assert_eq!(q.eval(&ParamVec::from([3.0, 4.0])), 12.5);
        let q2 = make_quadratic(2, ParamVec::from([2.0, 2.0]), 0.0).unwrap();
        assert_eq!(q2.grad(&ParamVec::from([1.0, 0.0])).as_slice(), &[2.0, 0.0]);
        assert_eq!(q2.smoothness(), Some(2.0));
        assert_eq!(q2.minima()[0].location.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn rejects_nonpositive_curvature() {
        assert!(matches!(
            make_quadratic(2, ParamVec::from([1.0, 0.0]), 0.0),
            Err(Error::Config(_))
        ));
        assert!(make_quadratic(2, ParamVec::from([1.0, -3.0]), 0.0).is_err());
        assert!(make_quadratic(3, ParamVec::from([1.0, 1.0]), 0.0).is_err());
    }

    #[test]
    fn noiseless_oracle_is_exact() {
        let q = make_quadratic(2, ParamVec::from([1.0, 3.0]), 0.0).unwrap();
        let x = ParamVec::from([0.3, -0.7]);
        assert_eq!(q.stochastic_grad(&x, NoiseSeed(9)), q.grad(&x));
    }

    #[test]
    fn confined_bound_matches_formula() {
        let q = make_quadratic(2, ParamVec::from([1.0, 0.5]), 0.5).unwrap();
        let c = q.confined_grad_bound(3.0).unwrap();
        assert!((c - (3.0 + 0.5 * 2f64.sqrt())).abs() < 1e-15);
    }
}
