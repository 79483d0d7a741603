//! A 2 x 2 grid over the distributed run's inner step and pulling strength,
//! written to a temporary directory and ranked by final objective value.

use std::collections::BTreeMap;

use lsam::harness::config::RunConfig;
use lsam::harness::sweep::{run_sweep, GridSpec};
use lsam::Result;

const BASE: &str = r#"
name = "sweep-demo"
algorithm = "lsam"
horizon = 50
seeds = [1, 2]
output_path = "unused"
x0 = [2.0, -2.0]

[objective]
kind = "quadratic"
hessian_diag = [1.0, 0.5]
noise_sigma = 0.5

[schedule]
eta0 = 0.05
rho_mode = "constant"
rho0 = 0.05
lambda = 1.0
alpha = 0.5

[dist]
n_workers = 2
tau = 8
eta_inner = 0.05
lambda0 = 0.5
eta_outer = 0.2
"#;

fn main() -> Result<()> {
    let mut base = RunConfig::from_toml_str(BASE)?;
    let dir = std::env::temp_dir().join("lsam-sweep-demo");
    base.output_path = dir.display().to_string();
    let mut grid = BTreeMap::new();
    grid.insert(
        "dist.eta_inner".to_string(),
        vec![toml::Value::Float(0.02), toml::Value::Float(0.05)],
    );
    grid.insert(
        "dist.lambda0".to_string(),
        vec![toml::Value::Float(0.2), toml::Value::Float(0.5)],
    );
    let spec = GridSpec { cap: 16, grid };
    println!(
        "{} runs; the reference grid has {}",
        spec.size(),
        GridSpec::reference_lsam_grid().size()
    );
    let summary = run_sweep(&base, &spec)?;
    for r in &summary.rows {
        println!(
            "{} {:<16} {:?} mean final f = {:.4e}",
            r.rank, r.name, r.assignments, r.final_f
        );
    }
    println!("summary in {}", dir.join("sweep_summary.json").display());
    Ok(())
}
