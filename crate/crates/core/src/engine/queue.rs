use alloc::vec;
use alloc::vec::Vec;

use crate::TimeMs;

/// Circular delay line of `horizon` one-millisecond slots.
///
/// Slot `t % horizon` holds the synapse groups due at time `t`. Entries are
/// accepted for `now..now + horizon` only, so a slot never mixes two due
/// times.
#[derive(Debug, Clone)]
pub struct SpikeQueue {
    slots: Vec<Vec<u32>>,
    now: TimeMs,
}

impl SpikeQueue {
    pub fn new(horizon: u32) -> Self {
        Self { slots: vec![Vec::new(); horizon.max(1) as usize], now: 0 }
    }

    pub fn horizon(&self) -> u32 {
        self.slots.len() as u32
    }

    pub fn now(&self) -> TimeMs {
        self.now
    }

    /// Schedules `group` for time `due`. Panics outside the horizon.
    pub fn push(&mut self, due: TimeMs, group: u32) {
        assert!(
            due >= self.now && due - self.now < self.horizon(),
            "due time {due} outside queue window starting at {}",
            self.now
        );
        let h = self.slots.len();
        self.slots[due as usize % h].push(group);
    }

    /// Moves the entries due at `now` into `out` (cleared first) and advances
    /// the queue by one millisecond.
    pub fn pop_due(&mut self, out: &mut Vec<u32>) {
        let h = self.slots.len();
        out.clear();
        core::mem::swap(out, &mut self.slots[self.now as usize % h]);
        self.now += 1;
    }

    pub fn pending(&self) -> usize {
        self.slots.iter().map(Vec::len).sum()
    }
}
