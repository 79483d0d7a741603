//! Frozen wide-deep hit counts of the default basin experiment.

use lsam::harness::verify::basins::{basin_table, BasinExperiment, FROZEN_WIDE_DEEP_HITS};
use lsam::harness::verify::VerifyOptions;

#[test]
fn wide_deep_hits_match_frozen_values() {
    let opts = VerifyOptions::default();
    let table = basin_table(&BasinExperiment::default(), opts.basin_inits, opts.seed).unwrap();
    for (method, hits) in FROZEN_WIDE_DEEP_HITS {
        let got = table.method(method).unwrap().wide_deep_hits();
        assert_eq!(got, hits, "{method}");
    }
}
