//! Run the density and distributed suites with shrunken experiment sizes and
//! print one line per criterion.

use lsam::harness::verify::{run_suite, Suite, VerifyOptions};
use lsam::Result;

fn main() -> Result<()> {
    for suite in [Suite::Densities, Suite::Distributed] {
        for report in run_suite(suite, VerifyOptions::quick())? {
            println!("{report}");
        }
    }
    Ok(())
}
