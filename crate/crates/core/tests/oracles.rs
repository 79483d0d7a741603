//! Densities and scores checked against closed forms from `statrs`.

use approx::assert_relative_eq;
use lsam::kernel_smoothing::{
    gaussian_kernel, lsam_density_quadrature, score_via_conditional, ConditionalSamplerConfig, SamplerMethod,
};
use lsam::landscapes::make_quadratic;
use lsam::quadrature::{Axis, QuadratureGrid};
use lsam::sam_map::{sam_partition_1d2d, SamParams};
use lsam::ParamVec;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

#[test]
fn sam_partition_of_unit_quadratic() {
    // f(T(x)) = (|x| + rho)^2 / 2, so Z = 2 sqrt(2 pi) (1 - Phi(rho)).
    let q = make_quadratic(1, ParamVec::from([1.0]), 0.0).unwrap();
    // Shifted bounds keep x = 0, where the map degenerates to the identity,
    // off the grid.
    let grid = QuadratureGrid::D1(Axis::new(-10.0 + 3.7e-5, 10.0, 200_001).unwrap());
    let std = Normal::new(0.0, 1.0).unwrap();
    for rho in [0.0, 0.05, 0.2, 0.5] {
        let z = sam_partition_1d2d(&q, &SamParams::new(rho, 1e-14).unwrap(), &grid)
            .unwrap()
            .value;
        let exact = 2.0 * (2.0 * std::f64::consts::PI).sqrt() * (1.0 - std.cdf(rho));
        assert_relative_eq!(z, exact, max_relative = 1e-6);
    }
}

#[test]
fn smoothed_density_of_conjugate_quadratic() {
    // rho = 0, f = x^2/2, Gaussian kernel of scale s: y ~ N(0, 1 + s^2).
    let q = make_quadratic(1, ParamVec::from([1.0]), 0.0).unwrap();
    let grid = QuadratureGrid::D1(Axis::with_spacing(-12.0, 12.0, 1e-3).unwrap());
    for s in [0.5, 1.0, 2.0] {
        let kern = gaussian_kernel(s, 1).unwrap();
        let law = Normal::new(0.0, (1.0 + s * s).sqrt()).unwrap();
        for y in [-2.5, -1.0, 0.0, 0.7, 3.0] {
            let d = lsam_density_quadrature(&q, &SamParams::off(1), &kern, &ParamVec::from([y]), &grid).unwrap();
            assert_relative_eq!(d, law.pdf(y), max_relative = 1e-6);
        }
    }
}

#[test]
fn conditional_score_matches_gaussian_posterior() {
    let q = make_quadratic(1, ParamVec::from([1.0]), 0.0).unwrap();
    let s = 0.8;
    let kern = gaussian_kernel(s, 1).unwrap();
    for (i, y) in [-1.5, 0.5, 2.0].into_iter().enumerate() {
        let cfg = ConditionalSamplerConfig::new(SamplerMethod::Mala, 0.5, 40_000, 100 + i as u64);
        let est = score_via_conditional(&q, &SamParams::off(1), &kern, &ParamVec::from([y]), &cfg).unwrap();
        assert!(
            (est.score[0] + y / (1.0 + s * s)).abs() < 0.05,
            "y {y}: {}",
            est.score[0]
        );
        assert!(est.health.is_healthy());
    }
}
