use crate::error::{Error, Result};
use crate::param::ParamVec;
use crate::rng::NoiseSeed;

use super::{gaussian_gradient_noise, BasinLabel, Minimum, Objective, ObjectiveConstants};

/// One-dimensional double well `f(x) = (x^2 - 1)^2`.
#[derive(Debug, Clone)]
pub struct DoubleWell {
    constants: ObjectiveConstants,
}

pub fn make_double_well(noise_sigma: f64) -> Result<DoubleWell> {
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::Config(format!("noise_sigma must be >= 0, got {noise_sigma}")));
    }
    Ok(DoubleWell {
        constants: ObjectiveConstants {
            dim: 1,
            // f'' = 12 x^2 - 4 is unbounded.
            smoothness_l: None,
            noise_sigma,
            grad_norm_c: None,
            minima: vec![
                Minimum {
                    location: ParamVec::from([-1.0]),
                    label: BasinLabel::WideDeep,
                },
                Minimum {
                    location: ParamVec::from([1.0]),
                    label: BasinLabel::WideDeep,
                },
            ],
        },
    })
}

impl Objective for DoubleWell {
    fn name(&self) -> &str {
        "double_well"
    }

    fn constants(&self) -> &ObjectiveConstants {
        &self.constants
    }

    fn eval(&self, x: &ParamVec) -> f64 {
        let u = x[0] * x[0] - 1.0;
        u * u
    }

    fn grad(&self, x: &ParamVec) -> ParamVec {
        ParamVec::from([4.0 * x[0] * (x[0] * x[0] - 1.0)])
    }

    fn stochastic_grad(&self, x: &ParamVec, noise: NoiseSeed) -> ParamVec {
        let mut g = self.grad(x);
        if self.constants.noise_sigma > 0.0 {
            g += &gaussian_gradient_noise(1, self.constants.noise_sigma, noise);
        }
        g
    }
}
