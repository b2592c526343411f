//! Message exchange between workers.
//!
//! A round is a dense single-word count exchange followed by a sparse payload
//! exchange restricted to pairs with a nonzero count. Received payloads are
//! always presented indexed by source worker, whatever the arrival order.
//!
//! Backends implement [`Fabric`]. This crate ships [`LoopbackFabric`] for a
//! single worker; the `dpsnn` crate adds a threaded backend.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FabricError {
    /// A peer did not answer within the backend's deadline.
    Timeout { peer: usize },
    /// A peer hung up.
    Disconnected { peer: usize },
    /// The delivered payload length differs from the announced one.
    SizeMismatch { peer: usize, expected: usize, got: usize },
    /// Per-peer vectors of the wrong length were passed in.
    Shape { expected: usize, got: usize },
    /// A message of the wrong kind arrived (count where payload expected, ...).
    Unexpected { peer: usize },
}

impl fmt::Display for FabricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FabricError::Timeout { peer } => write!(f, "timed out waiting for worker {peer}"),
            FabricError::Disconnected { peer } => write!(f, "worker {peer} disconnected"),
            FabricError::SizeMismatch { peer, expected, got } => {
                write!(f, "worker {peer} announced {expected} bytes but delivered {got}")
            }
            FabricError::Shape { expected, got } => {
                write!(f, "expected one entry per worker ({expected}), got {got}")
            }
            FabricError::Unexpected { peer } => write!(f, "unexpected message from worker {peer}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FabricError {}

/// Per-peer payload tallies kept by one endpoint.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrafficCounters {
    pub bytes_sent: Vec<u64>,
    pub transfers_sent: Vec<u64>,
    pub bytes_received: Vec<u64>,
    pub transfers_received: Vec<u64>,
    pub count_rounds: u64,
}

impl TrafficCounters {
    pub fn new(workers: usize) -> Self {
        Self {
            bytes_sent: vec![0; workers],
            transfers_sent: vec![0; workers],
            bytes_received: vec![0; workers],
            transfers_received: vec![0; workers],
            count_rounds: 0,
        }
    }

    pub fn record_sent(&mut self, peer: usize, bytes: usize) {
        self.bytes_sent[peer] += bytes as u64;
        self.transfers_sent[peer] += 1;
    }

    pub fn record_received(&mut self, peer: usize, bytes: usize) {
        self.bytes_received[peer] += bytes as u64;
        self.transfers_received[peer] += 1;
    }
}

pub trait Fabric {
    /// This endpoint's worker id.
    fn rank(&self) -> usize;

    /// Number of workers.
    fn size(&self) -> usize;

    /// Dense exchange: `counts[j]` goes to worker `j`; the result holds one
    /// entry per source worker.
    fn exchange_counts(&mut self, counts: &[u64]) -> Result<Vec<u64>, FabricError>;

    /// Sparse exchange: `outgoing[j]` is sent to worker `j` only if nonempty;
    /// `expected_len[s]` is the byte length announced by source `s`. Pairs with
    /// zero expected length do not communicate.
    fn exchange_payloads(
        &mut self,
        outgoing: Vec<Vec<u8>>,
        expected_len: &[usize],
    ) -> Result<Vec<Vec<u8>>, FabricError>;

    fn barrier(&mut self) -> Result<(), FabricError>;

    fn traffic(&self) -> &TrafficCounters;

    fn reset_traffic(&mut self);
}

/// Single-worker backend: everything is self-addressed.
#[derive(Debug, Clone)]
pub struct LoopbackFabric {
    traffic: TrafficCounters,
}

impl Default for LoopbackFabric {
    fn default() -> Self {
        Self { traffic: TrafficCounters::new(1) }
    }
}

impl LoopbackFabric {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Fabric for LoopbackFabric {
    fn rank(&self) -> usize {
        0
    }

    fn size(&self) -> usize {
        1
    }

    fn exchange_counts(&mut self, counts: &[u64]) -> Result<Vec<u64>, FabricError> {
        if counts.len() != 1 {
            return Err(FabricError::Shape { expected: 1, got: counts.len() });
        }
        self.traffic.count_rounds += 1;
        Ok(counts.to_vec())
    }

    fn exchange_payloads(
        &mut self,
        mut outgoing: Vec<Vec<u8>>,
        expected_len: &[usize],
    ) -> Result<Vec<Vec<u8>>, FabricError> {
        if outgoing.len() != 1 || expected_len.len() != 1 {
            return Err(FabricError::Shape { expected: 1, got: outgoing.len().max(expected_len.len()) });
        }
        let payload = outgoing.pop().unwrap_or_default();
        if payload.len() != expected_len[0] {
            return Err(FabricError::SizeMismatch { peer: 0, expected: expected_len[0], got: payload.len() });
        }
        if !payload.is_empty() {
            self.traffic.record_sent(0, payload.len());
            self.traffic.record_received(0, payload.len());
        }
        Ok(vec![payload])
    }

    fn barrier(&mut self) -> Result<(), FabricError> {
        Ok(())
    }

    fn traffic(&self) -> &TrafficCounters {
        &self.traffic
    }

    fn reset_traffic(&mut self) {
        self.traffic = TrafficCounters::new(1);
    }
}

/// Which worker pairs share at least one synapse, and how many.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityMask {
    workers: usize,
    /// Row-major `[source][target]` synapse counts.
    synapses: Vec<u64>,
}

impl ConnectivityMask {
    pub fn new(workers: usize) -> Self {
        Self { workers, synapses: vec![0; workers * workers] }
    }

    /// Builds the full mask from every worker's outgoing synapse counts.
    pub fn from_outgoing_rows(rows: &[Vec<u64>]) -> Self {
        let workers = rows.len();
        let mut mask = Self::new(workers);
        for (s, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), workers, "row {s} has the wrong length");
            mask.synapses[s * workers..(s + 1) * workers].copy_from_slice(row);
        }
        mask
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn synapse_count(&self, source: usize, target: usize) -> u64 {
        self.synapses[source * self.workers + target]
    }

    pub fn set(&mut self, source: usize, target: usize, count: u64) {
        self.synapses[source * self.workers + target] = count;
    }

    pub fn connected(&self, source: usize, target: usize) -> bool {
        self.synapse_count(source, target) > 0
    }

    pub fn connected_pairs(&self) -> usize {
        self.synapses.iter().filter(|&&c| c > 0).count()
    }
}
