//! Landscape-smoothed sharpness-aware minimization on tractable objectives.
//!
//! The crate is organised bottom-up:
//!
//! - [`landscapes`]: objectives with exact gradients and noisy oracles.
//! - [`sam_map`]: the stabilized look-back map, SAM loss and SAM density.
//! - [`kernel_smoothing`]: kernels, the smoothed density and its score.
//! - [`dual_loop`]: the single-chain coupled `(x, y)` update.
//! - [`dist_runtime`]: sampling workers around a momentum center.
//! - [`harness`]: configuration, metrics files, verification suites.

// Range checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist_runtime;
pub mod dual_loop;
pub mod error;
pub mod harness;
pub mod kernel_smoothing;
pub mod landscapes;
pub mod metrics;
pub mod param;
pub mod quadrature;
pub mod rng;
pub mod sam_map;

pub use error::{Error, Result};
pub use param::ParamVec;
