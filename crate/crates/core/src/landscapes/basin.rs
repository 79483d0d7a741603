//! Two-dimensional landscape with one basin of each type.
//!
//! `f(x) = c/2 |x|^2 - sum_k A_k exp(-|x - mu_k|^2 / (2 w_k^2))`
//!
//! The bump constants below are fixed: acceptance experiments refer to the
//! specific basins they produce.

use rand::Rng;

use crate::param::ParamVec;
use crate::rng::{NoiseSeed, SeedStreams};

use super::{gaussian_gradient_noise, BasinLabel, Minimum, Objective, ObjectiveConstants};

/// Square domain `[-5, 5]^2` the experiments draw initial points from.
pub const BASIN_DOMAIN: (f64, f64) = (-5.0, 5.0);

const CONFINEMENT: f64 = 0.12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: [f64; 2],
    pub depth: f64,
    pub width: f64,
    pub label: BasinLabel,
}

pub const BUMPS: [Bump; 3] = [
    Bump {
        center: [2.0, -2.0],
        depth: 7.0,
        width: 0.2,
        label: BasinLabel::DeepSharp,
    },
    Bump {
        center: [-1.8, 1.2],
        depth: 2.0,
        width: 1.7,
        label: BasinLabel::WideShallow,
    },
    Bump {
        center: [1.8, 2.2],
        depth: 5.0,
        width: 0.9,
        label: BasinLabel::WideDeep,
    },
];

#[derive(Debug, Clone)]
pub struct BasinLandscape {
    constants: ObjectiveConstants,
    seed: u64,
}

/// Build the three-basin landscape. The seed drives the random probe points
/// used (together with a dense grid) to estimate the smoothness constant.
pub fn make_basin_landscape(seed: i64) -> BasinLandscape {
    let seed = seed as u64;
    let mut land = BasinLandscape {
        constants: ObjectiveConstants {
            dim: 2,
            smoothness_l: None,
            noise_sigma: 0.0,
            grad_norm_c: None,
            minima: Vec::new(),
        },
        seed,
    };
    land.constants.minima = BUMPS
        .iter()
        .map(|b| Minimum {
            location: land.polish_minimum(ParamVec::from(b.center)),
            label: b.label,
        })
        .collect();
    land.constants.smoothness_l = Some(land.estimate_smoothness());
    land
}

impl BasinLandscape {
    /// Same landscape with additive Gaussian gradient noise of level `sigma`.
    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.constants.noise_sigma = sigma.max(0.0);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bumps(&self) -> &'static [Bump] {
        &BUMPS
    }

    /// Exact Hessian as `[[h00, h01], [h01, h11]]`.
    pub fn hessian(&self, x: &ParamVec) -> [[f64; 2]; 2] {
        let mut h = [[CONFINEMENT, 0.0], [0.0, CONFINEMENT]];
        for b in &BUMPS {
            let u = [x[0] - b.center[0], x[1] - b.center[1]];
            let w2 = b.width * b.width;
            let e = b.depth * (-(u[0] * u[0] + u[1] * u[1]) / (2.0 * w2)).exp();
            for i in 0..2 {
                for j in 0..2 {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    h[i][j] += e * (delta / w2 - u[i] * u[j] / (w2 * w2));
                }
            }
        }
        h
    }

    fn polish_minimum(&self, start: ParamVec) -> ParamVec {
        let mut x = start;
        for _ in 0..100 {
            let g = self.grad(&x);
            if g.norm() < 1e-14 {
                break;
            }
            let h = self.hessian(&x);
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            let dx = [
                (h[1][1] * g[0] - h[0][1] * g[1]) / det,
                (-h[1][0] * g[0] + h[0][0] * g[1]) / det,
            ];
            x[0] -= dx[0];
            x[1] -= dx[1];
        }
        x
    }

    fn spectral_norm(h: [[f64; 2]; 2]) -> f64 {
        let tr = 0.5 * (h[0][0] + h[1][1]);
        let disc = (0.25 * (h[0][0] - h[1][1]).powi(2) + h[0][1] * h[1][0]).sqrt();
        (tr + disc).abs().max((tr - disc).abs())
    }

    fn estimate_smoothness(&self) -> f64 {
        let (lo, hi) = BASIN_DOMAIN;
        let n = 401;
        let step = (hi - lo) / (n - 1) as f64;
        let mut l: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = ParamVec::from([lo + i as f64 * step, lo + j as f64 * step]);
                l = l.max(Self::spectral_norm(self.hessian(&x)));
            }
        }
        for b in &BUMPS {
            l = l.max(Self::spectral_norm(self.hessian(&ParamVec::from(b.center))));
        }
        let mut rng = SeedStreams::new(self.seed).rng("smoothness-probe", 0);
        for _ in 0..10_000 {
            let x = ParamVec::from([rng.random_range(lo..hi), rng.random_range(lo..hi)]);
            l = l.max(Self::spectral_norm(self.hessian(&x)));
        }
        l
    }
}

impl Objective for BasinLandscape {
    fn name(&self) -> &str {
        "basin3"
    }

    fn constants(&self) -> &ObjectiveConstants {
        &self.constants
    }

    fn eval(&self, x: &ParamVec) -> f64 {
        let mut f = 0.5 * CONFINEMENT * x.norm_sq();
        for b in &BUMPS {
            let r2 = (x[0] - b.center[0]).powi(2) + (x[1] - b.center[1]).powi(2);
            f -= b.depth * (-r2 / (2.0 * b.width * b.width)).exp();
        }
        f
    }

    fn grad(&self, x: &ParamVec) -> ParamVec {
        let mut g = [CONFINEMENT * x[0], CONFINEMENT * x[1]];
        for b in &BUMPS {
            let u = [x[0] - b.center[0], x[1] - b.center[1]];
            let w2 = b.width * b.width;
            let e = b.depth * (-(u[0] * u[0] + u[1] * u[1]) / (2.0 * w2)).exp() / w2;
            g[0] += e * u[0];
            g[1] += e * u[1];
        }
        ParamVec::from(g)
    }

    fn stochastic_grad(&self, x: &ParamVec, noise: NoiseSeed) -> ParamVec {
        let mut g = self.grad(x);
        if self.constants.noise_sigma > 0.0 {
            g += &gaussian_gradient_noise(2, self.constants.noise_sigma, noise);
        }
        g
    }
}
