//! Partition-invariant building blocks for distributed simulation of plastic
//! spiking networks.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. Everything here is deterministic: the network wiring, the
//! external stimulus and the spike ordering inside a worker depend only on the
//! master seed and the grid, never on how neurons are split across workers.
//!
//! IO, threads and wall clocks live in the companion `dpsnn` crate; the engine
//! reaches them only through the [`fabric::Fabric`] and [`engine::Clock`]
//! traits.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod connectome;
pub mod engine;
pub mod error;
pub mod fabric;
mod math;
pub mod model;
pub mod observe;
pub mod partition;
pub mod rng;
pub mod wire;

pub use crate::connectome::{
    ColumnCoord, ConnectomeSpec, GridSpec, InitialWeights, ProjectionQuota, SynapseRecord,
    ThalamicSpec,
};
pub use crate::engine::{Block, BlockTimerReport, Clock, Engine, NullClock, SimConfig, WorkerReport};
pub use crate::error::{Error, Result};
pub use crate::fabric::{ConnectivityMask, Fabric, FabricError, LoopbackFabric, TrafficCounters};
pub use crate::model::{IzhikevichParams, NeuronState, StdpParams};
pub use crate::observe::{Observables, RateBins, Spike, TraceSample};
pub use crate::partition::PartitionPlan;

/// Simulation time in whole milliseconds.
pub type TimeMs = u32;

/// Global neuron identifier.
pub type Gid = u32;
