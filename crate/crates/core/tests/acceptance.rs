//! Acceptance suite: one pass/fail line per criterion at the full protocol
//! sizes, with every tolerance pinned here. Runs without the libtest harness
//! so the lines are always printed.

use lsam::harness::verify::basins::FROZEN_WIDE_DEEP_HITS;
use lsam::harness::verify::densities::{DENSITY_TOL, GRADIENT_TOL};
use lsam::harness::verify::protocol::EQUIVALENCE_TOL;
use lsam::harness::verify::rates::IDENTITY_REL_TOL;
use lsam::harness::verify::score::SCORE_TOL;
use lsam::harness::verify::{Verifier, VerifyOptions};

fn tolerances_are_pinned() {
    assert_eq!(GRADIENT_TOL, 1e-5);
    assert_eq!(DENSITY_TOL, 1e-6);
    assert_eq!(SCORE_TOL, 0.05);
    assert_eq!(IDENTITY_REL_TOL, 1e-9);
    assert_eq!(EQUIVALENCE_TOL, 1e-10);
    let d = VerifyOptions::default();
    assert_eq!(d.rate_seeds, 10);
    assert_eq!(d.rate_horizon, 100_000);
    assert_eq!(d.vanishing_horizon, 1_000_000);
    assert_eq!(d.score_chain_len, 100_000);
    assert_eq!(d.basin_inits, 200);
    assert_eq!(d.concurrent_runs, 20);
    assert!(d.enforce_runtime);
}

fn acceptance() -> Vec<u8> {
    let mut verifier = Verifier::new(VerifyOptions::default());
    let mut failed = Vec::new();
    println!("acceptance criteria");
    // The identity check runs last so its tally covers every other run.
    for id in [1u8, 2, 3, 4, 5, 6, 7, 9, 10, 11, 8] {
        match verifier.criterion(id) {
            Ok(r) => {
                println!("{r}");
                if !r.passed {
                    failed.push(id);
                }
                if id == 11 {
                    let frozen = r.measurements.get("frozen_match").and_then(|v| v.as_bool());
                    println!("        frozen wide-deep hits {FROZEN_WIDE_DEEP_HITS:?}: match = {frozen:?}");
                }
            }
            Err(e) => {
                println!("[FAIL] {id:>2} error: {e}");
                failed.push(id);
            }
        }
    }
    println!("{}/11 criteria passed", 11 - failed.len());
    failed
}

fn main() {
    tolerances_are_pinned();
    println!("tolerances pinned: gradient 1e-5, density 1e-6, score 0.05, identity 1e-9, equivalence 1e-10");
    let failed = acceptance();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
