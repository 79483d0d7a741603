//! The stabilized look-back map, the SAM loss and the normalized SAM density.

use lsam::landscapes::{make_double_well, make_quadratic};
use lsam::quadrature::{Axis, QuadratureGrid};
use lsam::sam_map::{lookback_map, sam_grad, sam_loss, sam_partition_1d2d, SamParams};
use lsam::{ParamVec, Result};

fn main() -> Result<()> {
    let quad = make_quadratic(2, ParamVec::from([1.0, 0.5]), 0.0)?;
    let x = ParamVec::from([1.0, -0.5]);
    for rho in [0.0, 0.05, 0.2] {
        let p = SamParams::with_default_gamma(rho, 2)?;
        let t = lookback_map(&quad, &p, &x);
        println!(
            "rho {rho:<4}  T(x) = ({:+.4}, {:+.4})  |T(x) - x| = {:.4}  f(T(x)) = {:.5}  |sam grad| = {:.4}",
            t[0],
            t[1],
            t.distance(&x),
            sam_loss(&quad, &p, &x),
            sam_grad(&quad, &p, &x).norm()
        );
    }

    let well = make_double_well(0.0)?;
    let grid = QuadratureGrid::D1(Axis::with_spacing(-4.0, 4.0, 1e-3)?);
    println!("\ndouble well partition function of exp(-f(T(x))):");
    for rho in [0.0, 0.05, 0.1, 0.2] {
        let z = sam_partition_1d2d(&well, &SamParams::new(rho, 1e-8)?, &grid)?;
        println!(
            "  rho {rho:<4}  Z = {:.6}  (error estimate {:.1e})",
            z.value, z.error_estimate
        );
    }
    Ok(())
}
