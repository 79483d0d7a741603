//! Evaluate the built-in objectives, compare exact and finite-difference
//! gradients, and classify a few points on the three-basin landscape.

use lsam::harness::oracles::{fd_gradient, relative_error};
use lsam::landscapes::{
    basin_of, make_basin_landscape, make_double_well, make_mlp_regression, make_quadratic, Objective,
};
use lsam::{ParamVec, Result};

fn report(obj: &dyn Objective, x: &ParamVec) {
    let g = obj.grad(x);
    let fd = fd_gradient(obj, x, 1e-5);
    println!(
        "{:<12} dim {:>3}  f = {:>10.4}  |grad| = {:>9.4}  fd rel err = {:.2e}  L = {:?}",
        obj.name(),
        obj.dim(),
        obj.eval(x),
        g.norm(),
        relative_error(&g, &fd, 1e-6),
        obj.smoothness()
    );
}

fn main() -> Result<()> {
    let quad = make_quadratic(2, ParamVec::from([1.0, 0.5]), 0.5)?;
    let well = make_double_well(0.1)?;
    let basins = make_basin_landscape(0);
    let mlp = make_mlp_regression(8, 64, 0)?;

    report(&quad, &ParamVec::from([2.0, -2.0]));
    report(&well, &ParamVec::from([0.3]));
    report(&basins, &ParamVec::from([0.5, 0.5]));
    report(&mlp, &ParamVec::from_vec(vec![0.1; mlp.dim()]));

    println!("\nbasin catalog:");
    for m in basins.minima() {
        println!(
            "  {:<13} at ({:+.3}, {:+.3})  f = {:.4}",
            m.label.to_string(),
            m.location[0],
            m.location[1],
            basins.eval(&m.location)
        );
    }
    for p in [[2.1, -1.9], [-2.0, 1.0], [1.5, 2.5], [0.0, 0.0]] {
        let x = ParamVec::from(p);
        let label = basin_of(&basins, &x)
            .map(|l| l.to_string())
            .unwrap_or_else(|| "none".into());
        println!("  start ({:+.1}, {:+.1}) descends into {label}", p[0], p[1]);
    }
    Ok(())
}
