use alloc::vec::Vec;

/// Monotonic time source in nanoseconds.
pub trait Clock {
    fn now_ns(&self) -> u64;
}

/// A clock that never advances; for deterministic tests and `no_std` builds.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now_ns(&self) -> u64 {
        0
    }
}

/// Functional blocks of one simulation step, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Block {
    LtpPostSpike,
    Barrier,
    SpikesDim,
    SpikesPayload,
    IntraProcessMulticast,
    CurrentsLtd,
    Thalamic,
    NeuralDynamics,
    Statistics,
    LongTermPlasticity,
}

impl Block {
    pub const ALL: [Block; 10] = [
        Block::LtpPostSpike,
        Block::Barrier,
        Block::SpikesDim,
        Block::SpikesPayload,
        Block::IntraProcessMulticast,
        Block::CurrentsLtd,
        Block::Thalamic,
        Block::NeuralDynamics,
        Block::Statistics,
        Block::LongTermPlasticity,
    ];

    /// Row label used in profile reports.
    pub fn label(self) -> &'static str {
        match self {
            Block::LtpPostSpike => "Long term potentiation + after spike dynamic",
            Block::Barrier => "Barrier (optional)",
            Block::SpikesDim => "Communication: inter-process multicast: Spikes dim",
            Block::SpikesPayload => "Communication: inter-process multicast: Spikes payload",
            Block::IntraProcessMulticast => "Axonal to synaptic spikes: intra-process multicast",
            Block::CurrentsLtd => "Add synaptic currents + long term depression",
            Block::Thalamic => "Thalamic input",
            Block::NeuralDynamics => "Ordinary neural dynamic",
            Block::Statistics => "Rastergram & other statistical functions",
            Block::LongTermPlasticity => "Long term synaptic plasticity",
        }
    }

    pub fn from_label(label: &str) -> Option<Block> {
        Block::ALL.into_iter().find(|b| b.label() == label)
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Accumulated wall time per block, plus the enclosing loop time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlockTimerReport {
    block_ns: [u64; 10],
    pub loop_ns: u64,
    pub steps: u64,
    pub barrier_enabled: bool,
}

impl BlockTimerReport {
    pub fn new(barrier_enabled: bool) -> Self {
        Self { barrier_enabled, ..Self::default() }
    }

    pub fn add(&mut self, block: Block, ns: u64) {
        self.block_ns[block.index()] += ns;
    }

    pub fn nanos(&self, block: Block) -> u64 {
        self.block_ns[block.index()]
    }

    pub fn seconds(&self, block: Block) -> f64 {
        self.nanos(block) as f64 * 1e-9
    }

    pub fn tracked_ns(&self) -> u64 {
        self.block_ns.iter().sum()
    }

    /// Fraction of loop time not attributed to any block.
    pub fn residue_fraction(&self) -> f64 {
        if self.loop_ns == 0 {
            return 0.0;
        }
        self.loop_ns.saturating_sub(self.tracked_ns()) as f64 / self.loop_ns as f64
    }

    /// Blocks that appear in a report; the barrier only when enabled.
    pub fn blocks(&self) -> impl Iterator<Item = Block> + '_ {
        Block::ALL.into_iter().filter(move |&b| b != Block::Barrier || self.barrier_enabled)
    }

    /// `(block, seconds, percent of tracked time)` rows.
    pub fn rows(&self) -> Vec<(Block, f64, f64)> {
        let total: u64 = self.blocks().map(|b| self.nanos(b)).sum();
        self.blocks()
            .map(|b| {
                let pct = if total == 0 { 0.0 } else { self.nanos(b) as f64 * 100.0 / total as f64 };
                (b, self.seconds(b), pct)
            })
            .collect()
    }

    /// Per-block maximum across workers.
    pub fn max_across<'a>(reports: impl IntoIterator<Item = &'a BlockTimerReport>) -> BlockTimerReport {
        let mut out = BlockTimerReport::default();
        for r in reports {
            for (o, v) in out.block_ns.iter_mut().zip(r.block_ns) {
                *o = (*o).max(v);
            }
            out.loop_ns = out.loop_ns.max(r.loop_ns);
            out.steps = out.steps.max(r.steps);
            out.barrier_enabled |= r.barrier_enabled;
        }
        out
    }
}
