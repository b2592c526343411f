//! Multi-worker runtime, configuration, file formats and experiment drivers
//! for `dpsnn-core`.
//!
//! Workers are threads of one process, connected by [`fabric::ThreadedFabric`].
//! The `dpsnn` binary exposes the experiments as subcommands.

pub mod config;
pub mod error;
pub mod experiment;
pub mod fabric;
pub mod launch;
pub mod output;

pub use crate::config::{ExperimentConfig, WeakPoint};
pub use crate::error::HarnessError;
pub use crate::experiment::{
    first_divergence, run_msweep, run_scaling, run_single, verify_determinism, MsweepRow, ScalingMode, VerifyReport,
};
pub use crate::fabric::ThreadedFabric;
pub use crate::launch::{run_network, MonotonicClock, RunOutcome, RunPlan};
pub use crate::output::ScalingRecord;
