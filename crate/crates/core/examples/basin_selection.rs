//! Endpoint basins of the single chains and the distributed sampler from a
//! handful of uniform initializations on the three-basin landscape.

use lsam::harness::verify::basins::{basin_table, BasinExperiment};
use lsam::Result;

fn main() -> Result<()> {
    let table = basin_table(&BasinExperiment::default(), 24, 5)?;
    for m in &table.methods {
        let counts: Vec<String> = m.counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!(
            "{:<5} wide-deep fraction {:.3}  [{}]",
            m.method,
            m.wide_deep_fraction,
            counts.join(" ")
        );
    }
    Ok(())
}
