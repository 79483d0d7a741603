//! Estimate the smoothed-density score by sampling the conditional and
//! compare it with the Gaussian closed form and a quadrature reference.

use lsam::kernel_smoothing::{
    gaussian_kernel, score_via_conditional, ConditionalSamplerConfig, LsamDensity, SamplerMethod,
};
use lsam::landscapes::{make_double_well, make_quadratic};
use lsam::quadrature::{Axis, QuadratureGrid};
use lsam::sam_map::SamParams;
use lsam::{ParamVec, Result};

fn main() -> Result<()> {
    let s = 1.0;
    let quad = make_quadratic(1, ParamVec::from([1.0]), 0.0)?;
    let kern = gaussian_kernel(s, 1)?;
    println!("quadratic, s = {s}: score vs -y / (1 + s^2)");
    for (i, y) in [-2.0, 0.0, 1.5].into_iter().enumerate() {
        let cfg = ConditionalSamplerConfig::new(SamplerMethod::Mala, 0.8, 50_000, 10 + i as u64);
        let est = score_via_conditional(&quad, &SamParams::off(1), &kern, &ParamVec::from([y]), &cfg)?;
        println!(
            "  y {y:+.1}  estimate {:+.4}  exact {:+.4}  acceptance {:.2}",
            est.score[0],
            -y / (1.0 + s * s),
            est.health.acceptance_rate.unwrap_or(f64::NAN)
        );
    }

    let well = make_double_well(0.0)?;
    let kern = gaussian_kernel(0.5, 1)?;
    let p = SamParams::new(0.05, 1e-8)?;
    let dens = LsamDensity::new(
        &well,
        &p,
        &kern,
        &QuadratureGrid::D1(Axis::with_spacing(-4.0, 4.0, 1e-3)?),
    )?;
    println!("\ndouble well, rho = 0.05, s = 0.5: score vs finite difference of the log-density");
    for (i, y) in [-1.0, 0.5, 2.0].into_iter().enumerate() {
        let h = 1e-3;
        let fd =
            (dens.log_density(&ParamVec::from([y + h]))? - dens.log_density(&ParamVec::from([y - h]))?) / (2.0 * h);
        let cfg = ConditionalSamplerConfig::new(SamplerMethod::Mala, 0.05, 50_000, 20 + i as u64)
            .with_init(ParamVec::from([y.clamp(-1.0, 1.0)]));
        let est = score_via_conditional(&well, &p, &kern, &ParamVec::from([y]), &cfg)?;
        println!("  y {y:+.1}  estimate {:+.4}  reference {fd:+.4}", est.score[0]);
    }
    Ok(())
}
