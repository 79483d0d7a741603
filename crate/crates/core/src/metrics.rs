//! Per-step metrics rows shared by the single-chain and distributed runners.

use serde::{Deserialize, Serialize};

/// Steps below this index are always recorded.
pub const FULL_RESOLUTION_STEPS: u64 = 1_000;
/// Recording stride after [`FULL_RESOLUTION_STEPS`].
pub const DOWNSAMPLE_STRIDE: u64 = 10;

/// Column order is part of the file format.
pub const CSV_COLUMNS: [&str; 9] = [
    "t",
    "wall_ns",
    "f_val",
    "grad_norm_sq",
    "G_norm_sq",
    "z_norm_sq",
    "phi",
    "sync_flag",
    "worker_id",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub t: u64,
    pub wall_ns: u64,
    pub f_val: f64,
    pub grad_norm_sq: f64,
    #[serde(rename = "G_norm_sq")]
    pub g_norm_sq: f64,
    pub z_norm_sq: f64,
    pub phi: f64,
    pub sync_flag: bool,
    /// `-1` for center or single-chain rows.
    pub worker_id: i64,
}

/// Downsampling rule: every step below 1000, then every 10th, and every sync.
pub fn should_record(t: u64, sync: bool) -> bool {
    sync || t < FULL_RESOLUTION_STEPS || t.is_multiple_of(DOWNSAMPLE_STRIDE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn downsampling_rule() {
        assert!(should_record(999, false));
        assert!(!should_record(1001, false));
        assert!(should_record(1010, false));
        assert!(should_record(1003, true));
    }
}
