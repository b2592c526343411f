//! In-memory observables gathered by each worker and merged by the harness.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Gid, TimeMs};

/// One raster entry. Ordered by time, then gid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Spike {
    pub t: TimeMs,
    pub gid: Gid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: TimeMs,
    pub gid: Gid,
    pub v: f64,
    pub u: f64,
}

/// Spike counts per column per time bin over the measured window.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RateBins {
    pub start_ms: TimeMs,
    pub bin_ms: u32,
    pub columns: u32,
    pub bins: u32,
    /// `counts[column * bins + bin]`
    pub counts: Vec<u64>,
}

impl RateBins {
    pub fn new(start_ms: TimeMs, duration_ms: u32, bin_ms: u32, columns: u32) -> Self {
        let bins = duration_ms.div_ceil(bin_ms.max(1));
        Self { start_ms, bin_ms, columns, bins, counts: vec![0; (columns * bins) as usize] }
    }

    pub fn record(&mut self, t: TimeMs, column: u32) {
        if t < self.start_ms {
            return;
        }
        let bin = (t - self.start_ms) / self.bin_ms;
        if bin < self.bins {
            self.counts[(column * self.bins + bin) as usize] += 1;
        }
    }

    pub fn count(&self, column: u32, bin: u32) -> u64 {
        self.counts[(column * self.bins + bin) as usize]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Spike count of each bin summed over all columns.
    pub fn per_bin_totals(&self) -> Vec<u64> {
        (0..self.bins).map(|b| (0..self.columns).map(|c| self.count(c, b)).sum()).collect()
    }

    fn add(&mut self, other: &RateBins) {
        if self.counts.is_empty() {
            *self = other.clone();
            return;
        }
        assert_eq!(
            (self.start_ms, self.bin_ms, self.columns, self.bins),
            (other.start_ms, other.bin_ms, other.columns, other.bins),
            "rate bins with different layouts"
        );
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Histogram of plastic (excitatory) weights over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightHistogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl WeightHistogram {
    pub fn new(lo: f64, hi: f64, bins: u32) -> Self {
        Self { lo, hi, counts: vec![0; bins.max(1) as usize] }
    }

    pub fn record(&mut self, w: f64) {
        let n = self.counts.len();
        let span = self.hi - self.lo;
        let idx = if span > 0.0 { ((w - self.lo) / span * n as f64) as isize } else { 0 };
        self.counts[idx.clamp(0, n as isize - 1) as usize] += 1;
    }

    fn add(&mut self, other: &WeightHistogram) {
        if self.counts.is_empty() {
            *self = other.clone();
            return;
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observables {
    pub spikes: Vec<Spike>,
    pub rates: RateBins,
    pub traces: Vec<TraceSample>,
    pub weights: WeightHistogram,
}

impl Observables {
    /// Merges per-worker observables into canonical order.
    pub fn merge(parts: impl IntoIterator<Item = Observables>) -> Observables {
        let mut out = Observables::default();
        for p in parts {
            out.spikes.extend(p.spikes);
            out.traces.extend(p.traces);
            out.rates.add(&p.rates);
            out.weights.add(&p.weights);
        }
        out.spikes.sort_unstable();
        out.traces.sort_by_key(|s| (s.t, s.gid));
        out
    }

    /// Mean firing rate (Hz) over the measured window.
    pub fn mean_rate_hz(&self, neurons: u64) -> f64 {
        let window_ms = self.rates.bins as u64 * self.rates.bin_ms as u64;
        if neurons == 0 || window_ms == 0 {
            return 0.0;
        }
        self.rates.total() as f64 / neurons as f64 / (window_ms as f64 / 1000.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_orders_raster() {
        let a = Observables {
            spikes: vec![Spike { t: 2, gid: 9 }, Spike { t: 5, gid: 1 }],
            rates: RateBins::new(0, 10, 5, 1),
            ..Default::default()
        };
        let b = Observables {
            spikes: vec![Spike { t: 2, gid: 3 }],
            rates: RateBins::new(0, 10, 5, 1),
            ..Default::default()
        };
        let m = Observables::merge([a, b]);
        assert_eq!(m.spikes, vec![Spike { t: 2, gid: 3 }, Spike { t: 2, gid: 9 }, Spike { t: 5, gid: 1 }]);
        assert_eq!(m.rates.bins, 2);
    }

    #[test]
    fn rate_bins_window() {
        let mut r = RateBins::new(100, 250, 100, 2);
        assert_eq!(r.bins, 3);
        r.record(50, 0);
        r.record(100, 1);
        r.record(349, 0);
        r.record(400, 0);
        assert_eq!(r.total(), 2);
        assert_eq!(r.count(1, 0), 1);
        assert_eq!(r.count(0, 2), 1);
        assert_eq!(r.per_bin_totals(), vec![1, 0, 1]);
    }

    #[test]
    fn histogram_edges() {
        let mut h = WeightHistogram::new(0.0, 10.0, 10);
        h.record(0.0);
        h.record(10.0);
        h.record(-3.0);
        h.record(5.5);
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[9], 1);
        assert_eq!(h.counts[5], 1);
    }
}
