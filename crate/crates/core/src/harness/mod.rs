//! Experiment plumbing: configuration files, metrics output, reference
//! oracles, verification suites, parameter sweeps and the command line.

pub mod cli;
pub mod config;
pub mod oracles;
pub mod output;
pub mod runner;
pub mod sweep;
pub mod verify;
