//! Column-grid network generation.
//!
//! Columns sit on a `cfx x cfy` torus. Neurons are numbered column by column
//! (`column = y * cfx + x`), excitatory block first, then the inhibitory block.
//! Every neuron's forward projection and every stimulus event is a pure
//! function of `(master_seed, key)`, see [`crate::rng`].

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::{self, stream};
use crate::{Gid, TimeMs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColumnCoord {
    pub x: u32,
    pub y: u32,
}

impl ColumnCoord {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub cfx: u32,
    pub cfy: u32,
    pub neurons_per_column: u32,
    pub excitatory_fraction: f64,
    /// Forward synapses projected by each neuron.
    pub synapses_per_neuron: u32,
    pub delay_min: u32,
    pub delay_max: u32,
    pub master_seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            cfx: 1,
            cfy: 1,
            neurons_per_column: 1000,
            excitatory_fraction: 0.8,
            synapses_per_neuron: 200,
            delay_min: 1,
            delay_max: 20,
            master_seed: 1,
        }
    }
}

impl GridSpec {
    pub fn with_size(cfx: u32, cfy: u32) -> Self {
        Self { cfx, cfy, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cfx == 0 || self.cfy == 0 {
            return Err(Error::config("grid", "cfx and cfy must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.excitatory_fraction) {
            return Err(Error::config("excitatory_fraction", "must lie in [0, 1]"));
        }
        let exact = self.excitatory_fraction * self.neurons_per_column as f64;
        if (exact - self.excitatory_count() as f64).abs() > 1e-9 {
            return Err(Error::config(
                "excitatory_fraction",
                "excitatory_fraction * neurons_per_column must be an integer",
            ));
        }
        if self.excitatory_count() < 2 || self.neurons_per_column < 2 {
            return Err(Error::config(
                "neurons_per_column",
                "excitatory pool smaller than 2 cannot exclude self-targets",
            ));
        }
        if self.synapses_per_neuron == 0 {
            return Err(Error::config("synapses_per_neuron", "must be >= 1"));
        }
        if self.delay_min == 0 || self.delay_min > self.delay_max || self.delay_max > 255 {
            return Err(Error::config("delay", "need 1 <= delay_min <= delay_max <= 255"));
        }
        let n = self.total_neurons();
        if n > u32::MAX as u64 {
            return Err(Error::config("grid", "more than 2^32 neurons"));
        }
        Ok(())
    }

    pub fn columns(&self) -> u32 {
        self.cfx * self.cfy
    }

    pub fn excitatory_count(&self) -> u32 {
        math::round(self.excitatory_fraction * self.neurons_per_column as f64) as u32
    }

    pub fn total_neurons(&self) -> u64 {
        self.columns() as u64 * self.neurons_per_column as u64
    }

    pub fn total_synapses(&self) -> u64 {
        self.total_neurons() * self.synapses_per_neuron as u64
    }

    pub fn column_index(&self, c: ColumnCoord) -> u32 {
        c.y * self.cfx + c.x
    }

    pub fn column_coord(&self, index: u32) -> ColumnCoord {
        ColumnCoord::new(index % self.cfx, index / self.cfx)
    }

    pub fn column_of(&self, gid: Gid) -> u32 {
        gid / self.neurons_per_column
    }

    pub fn is_excitatory(&self, gid: Gid) -> bool {
        gid % self.neurons_per_column < self.excitatory_count()
    }

    pub fn first_gid(&self, column: u32) -> Gid {
        column * self.neurons_per_column
    }
}

/// Exact per-target-column synapse counts of an excitatory neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionQuota {
    pub own: u32,
    pub per_first_neighbor: u32,
    pub per_second_neighbor: u32,
    pub per_third_neighbor: u32,
}

impl ProjectionQuota {
    /// 76% own column, 3% / 2% / 1% to each column of rings 1 / 2 / 3.
    /// Requires `m` to be a multiple of 100.
    pub fn for_synapses(m: u32) -> Result<Self> {
        if m == 0 || !m.is_multiple_of(100) {
            return Err(Error::config(
                "synapses_per_neuron",
                "must be a positive multiple of 100 for integer ring quotas",
            ));
        }
        let unit = m / 100;
        Ok(Self {
            own: 76 * unit,
            per_first_neighbor: 3 * unit,
            per_second_neighbor: 2 * unit,
            per_third_neighbor: unit,
        })
    }

    pub fn total(&self) -> u32 {
        self.own + 4 * (self.per_first_neighbor + self.per_second_neighbor + self.per_third_neighbor)
    }

    pub fn per_ring(&self, ring: u8) -> u32 {
        match ring {
            1 => self.per_first_neighbor,
            2 => self.per_second_neighbor,
            3 => self.per_third_neighbor,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialWeights {
    pub excitatory: f64,
    pub inhibitory: f64,
}

impl Default for InitialWeights {
    fn default() -> Self {
        Self { excitatory: 6.0, inhibitory: -5.0 }
    }
}

/// External stimulus: `events_per_ms_per_column` randomly chosen neurons of
/// every column receive `amplitude` for one millisecond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThalamicSpec {
    pub events_per_ms_per_column: u32,
    pub amplitude: f64,
}

impl Default for ThalamicSpec {
    fn default() -> Self {
        Self { events_per_ms_per_column: 8, amplitude: 20.0 }
    }
}

/// Everything needed to regenerate the network wiring.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectomeSpec {
    pub grid: GridSpec,
    pub quota: ProjectionQuota,
    pub weights: InitialWeights,
}

impl ConnectomeSpec {
    pub fn new(grid: GridSpec) -> Result<Self> {
        let quota = ProjectionQuota::for_synapses(grid.synapses_per_neuron)?;
        let spec = Self { grid, quota, weights: InitialWeights::default() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.quota.total() != self.grid.synapses_per_neuron {
            return Err(Error::config("quota", "ring quotas must add up to synapses_per_neuron"));
        }
        if self.weights.excitatory < 0.0 || self.weights.inhibitory > 0.0 {
            return Err(Error::config("weights", "excitatory must be >= 0 and inhibitory <= 0"));
        }
        Ok(())
    }
}

/// One forward synapse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapseRecord {
    pub target_gid: Gid,
    pub delay: u8,
    pub weight: f64,
    pub delta_accumulator: f64,
    pub last_delivery_time: Option<TimeMs>,
}

const RING_OFFSETS: [[(i64, i64); 4]; 3] = [
    [(1, 0), (-1, 0), (0, 1), (0, -1)],
    [(1, 1), (1, -1), (-1, 1), (-1, -1)],
    [(2, 0), (-2, 0), (0, 2), (0, -2)],
];

/// The four columns of neighbor ring `ring` (1, 2 or 3) around `col`, wrapped
/// on the torus. Duplicates produced by wrapping on small grids are kept.
pub fn neighbor_columns(grid: &GridSpec, col: ColumnCoord, ring: u8) -> [ColumnCoord; 4] {
    assert!((1..=3).contains(&ring), "ring must be 1, 2 or 3");
    let wrap = |v: u32, off: i64, n: u32| (v as i64 + off).rem_euclid(n as i64) as u32;
    RING_OFFSETS[(ring - 1) as usize]
        .map(|(dx, dy)| ColumnCoord::new(wrap(col.x, dx, grid.cfx), wrap(col.y, dy, grid.cfy)))
}

/// Target columns of an excitatory source, one entry per quota slot group:
/// own column first, then rings 1..3 in [`neighbor_columns`] order.
fn target_column_plan(spec: &ConnectomeSpec, column: u32) -> [(u32, u32); 13] {
    let grid = &spec.grid;
    let coord = grid.column_coord(column);
    let mut plan = [(column, spec.quota.own); 13];
    let mut i = 1;
    for ring in 1..=3u8 {
        for c in neighbor_columns(grid, coord, ring) {
            plan[i] = (grid.column_index(c), spec.quota.per_ring(ring));
            i += 1;
        }
    }
    plan
}

/// Forward synapses of `source_gid`, in projection-slot order.
///
/// Depends only on the connectome spec and the source id.
pub fn project_forward_synapses(spec: &ConnectomeSpec, source_gid: Gid) -> Result<Vec<SynapseRecord>> {
    let mut out = Vec::with_capacity(spec.grid.synapses_per_neuron as usize);
    project_into(spec, source_gid, &mut out)?;
    Ok(out)
}

/// Like [`project_forward_synapses`], appending to `out`.
pub fn project_into(spec: &ConnectomeSpec, source_gid: Gid, out: &mut Vec<SynapseRecord>) -> Result<()> {
    let grid = &spec.grid;
    if source_gid as u64 >= grid.total_neurons() {
        return Err(Error::OutOfRange {
            what: "source gid",
            value: source_gid as u64,
            limit: grid.total_neurons(),
        });
    }
    let seed = grid.master_seed;
    let column = grid.column_of(source_gid);
    let mut slot = 0u64;
    // draw a target among `pool` neurons starting at `base`, redrawing on self
    let draw = |base: Gid, pool: u32, slot: u64| -> Gid {
        let mut attempt = 0u64;
        loop {
            let k = rng::stateless_below(seed, &[stream::TARGET, source_gid as u64, slot, attempt], pool);
            let target = base + k;
            if target != source_gid {
                return target;
            }
            attempt += 1;
        }
    };

    if grid.is_excitatory(source_gid) {
        let span = grid.delay_max - grid.delay_min + 1;
        for (target_col, count) in target_column_plan(spec, column) {
            let base = grid.first_gid(target_col);
            for _ in 0..count {
                let target_gid = draw(base, grid.neurons_per_column, slot);
                let delay = grid.delay_min
                    + rng::stateless_below(seed, &[stream::DELAY, source_gid as u64, slot], span);
                out.push(SynapseRecord {
                    target_gid,
                    delay: delay as u8,
                    weight: spec.weights.excitatory,
                    delta_accumulator: 0.0,
                    last_delivery_time: None,
                });
                slot += 1;
            }
        }
    } else {
        let base = grid.first_gid(column);
        for _ in 0..grid.synapses_per_neuron {
            let target_gid = draw(base, grid.excitatory_count(), slot);
            out.push(SynapseRecord {
                target_gid,
                delay: grid.delay_min as u8,
                weight: spec.weights.inhibitory,
                delta_accumulator: 0.0,
                last_delivery_time: None,
            });
            slot += 1;
        }
    }
    Ok(())
}

/// Stimulus events of one column for millisecond `t`: `(target gid, amplitude)`.
pub fn thalamic_events(grid: &GridSpec, thalamic: &ThalamicSpec, t: TimeMs, column: u32) -> Vec<(Gid, f64)> {
    let base = grid.first_gid(column);
    (0..thalamic.events_per_ms_per_column)
        .map(|k| {
            let key = [stream::THALAMIC, t as u64, column as u64, k as u64];
            let local = rng::stateless_below(grid.master_seed, &key, grid.neurons_per_column);
            (base + local, thalamic.amplitude)
        })
        .collect()
}
