//! In-process multi-worker fabric over `std::sync::mpsc` channels.
//!
//! Every ordered worker pair `(s, t)` has its own FIFO channel, so messages of
//! consecutive rounds never overtake each other. Self-addressed payloads are
//! handed back directly.

use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use dpsnn_core::{Fabric, FabricError, TrafficCounters};

#[derive(Debug)]
enum Msg {
    Count(u64),
    Payload(Vec<u8>),
}

#[derive(Debug, Default)]
struct BarrierState {
    arrived: usize,
    generation: u64,
    /// Set when an endpoint is dropped; waiting peers give up.
    broken: Option<usize>,
}

#[derive(Debug)]
struct SharedBarrier {
    size: usize,
    state: Mutex<BarrierState>,
    cv: Condvar,
}

impl SharedBarrier {
    fn wait(&self, rank: usize, timeout: Duration) -> Result<(), FabricError> {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(peer) = st.broken {
            return Err(FabricError::Disconnected { peer });
        }
        let gen = st.generation;
        st.arrived += 1;
        if st.arrived == self.size {
            st.arrived = 0;
            st.generation += 1;
            self.cv.notify_all();
            return Ok(());
        }
        let deadline = Instant::now() + timeout;
        while st.generation == gen {
            if let Some(peer) = st.broken {
                return Err(FabricError::Disconnected { peer });
            }
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                // blame the lowest-ranked peer other than the caller
                let peer = if rank == 0 { 1 } else { 0 };
                return Err(FabricError::Timeout { peer });
            }
            st = self.cv.wait_timeout(st, left).unwrap_or_else(|e| e.into_inner()).0;
        }
        Ok(())
    }

    fn break_with(&self, rank: usize) {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        st.broken.get_or_insert(rank);
        self.cv.notify_all();
    }
}

/// One worker's endpoint. Build a full set with [`ThreadedFabric::mesh`].
#[derive(Debug)]
pub struct ThreadedFabric {
    rank: usize,
    /// `to[j]` feeds worker `j`; `None` for self
    to: Vec<Option<Sender<Msg>>>,
    /// `from[s]` drains worker `s`; `None` for self
    from: Vec<Option<Receiver<Msg>>>,
    barrier: Arc<SharedBarrier>,
    timeout: Duration,
    traffic: TrafficCounters,
}

impl ThreadedFabric {
    /// Creates `workers` connected endpoints, indexed by rank. Every blocking
    /// receive gives up after `timeout`.
    #[allow(clippy::needless_range_loop)]
    pub fn mesh(workers: usize, timeout: Duration) -> Vec<ThreadedFabric> {
        assert!(workers > 0, "a fabric needs at least one worker");
        let barrier = Arc::new(SharedBarrier { size: workers, state: Mutex::default(), cv: Condvar::new() });
        let mut to: Vec<Vec<Option<Sender<Msg>>>> = (0..workers).map(|_| Vec::new()).collect();
        let mut from: Vec<Vec<Option<Receiver<Msg>>>> = (0..workers).map(|_| Vec::new()).collect();
        for s in 0..workers {
            for t in 0..workers {
                if s == t {
                    to[s].push(None);
                    from[t].push(None);
                } else {
                    let (tx, rx) = channel();
                    to[s].push(Some(tx));
                    from[t].push(Some(rx));
                }
            }
        }
        to.into_iter()
            .zip(from)
            .enumerate()
            .map(|(rank, (to, from))| ThreadedFabric {
                rank,
                to,
                from,
                barrier: Arc::clone(&barrier),
                timeout,
                traffic: TrafficCounters::new(workers),
            })
            .collect()
    }

    fn send(&self, peer: usize, msg: Msg) -> Result<(), FabricError> {
        let tx = self.to[peer].as_ref().expect("no channel to self");
        tx.send(msg).map_err(|_| FabricError::Disconnected { peer })
    }

    fn recv(&self, peer: usize) -> Result<Msg, FabricError> {
        let rx = self.from[peer].as_ref().expect("no channel from self");
        rx.recv_timeout(self.timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => FabricError::Timeout { peer },
            RecvTimeoutError::Disconnected => FabricError::Disconnected { peer },
        })
    }

    fn check_shape(&self, got: usize) -> Result<(), FabricError> {
        if got != self.size() {
            return Err(FabricError::Shape { expected: self.size(), got });
        }
        Ok(())
    }
}

impl Drop for ThreadedFabric {
    fn drop(&mut self) {
        self.barrier.break_with(self.rank);
    }
}

impl Fabric for ThreadedFabric {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.to.len()
    }

    fn exchange_counts(&mut self, counts: &[u64]) -> Result<Vec<u64>, FabricError> {
        self.check_shape(counts.len())?;
        for (peer, &c) in counts.iter().enumerate() {
            if peer != self.rank {
                self.send(peer, Msg::Count(c))?;
            }
        }
        let mut out = vec![0; self.size()];
        for (peer, slot) in out.iter_mut().enumerate() {
            *slot = if peer == self.rank {
                counts[peer]
            } else {
                match self.recv(peer)? {
                    Msg::Count(c) => c,
                    Msg::Payload(_) => return Err(FabricError::Unexpected { peer }),
                }
            };
        }
        self.traffic.count_rounds += 1;
        Ok(out)
    }

    fn exchange_payloads(
        &mut self,
        outgoing: Vec<Vec<u8>>,
        expected_len: &[usize],
    ) -> Result<Vec<Vec<u8>>, FabricError> {
        self.check_shape(outgoing.len())?;
        self.check_shape(expected_len.len())?;
        let mut own = Vec::new();
        for (peer, bytes) in outgoing.into_iter().enumerate() {
            if bytes.is_empty() {
                continue;
            }
            self.traffic.record_sent(peer, bytes.len());
            if peer == self.rank {
                own = bytes;
            } else {
                self.send(peer, Msg::Payload(bytes))?;
            }
        }
        let mut out = Vec::with_capacity(self.size());
        for (peer, &expected) in expected_len.iter().enumerate() {
            let got = if expected == 0 {
                Vec::new()
            } else if peer == self.rank {
                std::mem::take(&mut own)
            } else {
                match self.recv(peer)? {
                    Msg::Payload(b) => b,
                    Msg::Count(_) => return Err(FabricError::Unexpected { peer }),
                }
            };
            if got.len() != expected {
                return Err(FabricError::SizeMismatch { peer, expected, got: got.len() });
            }
            if expected > 0 {
                self.traffic.record_received(peer, got.len());
            }
            out.push(got);
        }
        if !own.is_empty() {
            // self-addressed bytes that were announced as zero
            return Err(FabricError::SizeMismatch { peer: self.rank, expected: 0, got: own.len() });
        }
        Ok(out)
    }

    fn barrier(&mut self) -> Result<(), FabricError> {
        self.barrier.wait(self.rank, self.timeout)
    }

    fn traffic(&self) -> &TrafficCounters {
        &self.traffic
    }

    fn reset_traffic(&mut self) {
        self.traffic = TrafficCounters::new(self.size());
    }
}
