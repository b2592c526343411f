use alloc::vec;
use alloc::vec::Vec;

use crate::{Gid, TimeMs};

pub const NEVER: TimeMs = TimeMs::MAX;

/// One incoming synapse as stored on the target's worker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synapse {
    /// Local index of the target neuron.
    pub target: u32,
    pub delay: u8,
    /// Excitatory source; only these synapses are plastic.
    pub excitatory: bool,
    pub weight: f64,
    pub delta: f64,
    /// Time of the most recent delivery, [`NEVER`] if none.
    pub last_delivery: TimeMs,
}

/// Synapses sharing one source axon and one delay, stored contiguously.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelayGroup {
    pub delay: u8,
    pub start: u32,
    pub end: u32,
}

/// Incoming synapses of one worker, grouped by source axon and then by delay.
///
/// Group indices increase with `(source gid, delay)`, so sorting a list of
/// group indices yields that delivery order.
#[derive(Debug, Clone, Default)]
pub struct SynapseStore {
    synapses: Vec<Synapse>,
    sources: Vec<Gid>,
    /// groups of axon `a` are `groups[axon_groups[a]..axon_groups[a + 1]]`
    axon_groups: Vec<u32>,
    groups: Vec<DelayGroup>,
    source_of_group: Vec<Gid>,
    /// excitatory synapse indices per local target, CSR
    by_target_offsets: Vec<u32>,
    by_target: Vec<u32>,
}

/// Input record for [`SynapseStore::build`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncomingSynapse {
    pub source: Gid,
    pub target: u32,
    pub delay: u8,
    pub excitatory: bool,
    pub weight: f64,
}

impl SynapseStore {
    /// Builds the store. Synapses of the same `(source, delay)` keep their
    /// relative input order.
    pub fn build(local_neurons: u32, mut incoming: Vec<IncomingSynapse>) -> Self {
        incoming.sort_by_key(|s| (s.source, s.delay));
        let mut store = SynapseStore {
            synapses: Vec::with_capacity(incoming.len()),
            ..Default::default()
        };
        for (i, s) in incoming.iter().enumerate() {
            let new_source = store.sources.last() != Some(&s.source) || i == 0;
            if new_source {
                store.sources.push(s.source);
                store.axon_groups.push(store.groups.len() as u32);
            }
            let new_group = new_source || store.groups.last().map(|g| g.delay) != Some(s.delay);
            if new_group {
                let at = i as u32;
                store.groups.push(DelayGroup { delay: s.delay, start: at, end: at });
                store.source_of_group.push(s.source);
            }
            store.groups.last_mut().unwrap().end += 1;
            store.synapses.push(Synapse {
                target: s.target,
                delay: s.delay,
                excitatory: s.excitatory,
                weight: s.weight,
                delta: 0.0,
                last_delivery: NEVER,
            });
        }
        store.axon_groups.push(store.groups.len() as u32);

        let mut counts = vec![0u32; local_neurons as usize + 1];
        for s in store.synapses.iter().filter(|s| s.excitatory) {
            counts[s.target as usize + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        store.by_target = vec![0; counts[local_neurons as usize] as usize];
        for (idx, s) in store.synapses.iter().enumerate().filter(|(_, s)| s.excitatory) {
            let slot = &mut fill[s.target as usize];
            store.by_target[*slot as usize] = idx as u32;
            *slot += 1;
        }
        store.by_target_offsets = counts;
        store
    }

    pub fn len(&self) -> usize {
        self.synapses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synapses.is_empty()
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    pub fn synapses_mut(&mut self) -> &mut [Synapse] {
        &mut self.synapses
    }

    /// Distinct source axons, ascending.
    pub fn sources(&self) -> &[Gid] {
        &self.sources
    }

    pub fn axon(&self, source: Gid) -> Option<usize> {
        self.sources.binary_search(&source).ok()
    }

    /// Group index range of an axon.
    pub fn groups_of_axon(&self, axon: usize) -> core::ops::Range<u32> {
        self.axon_groups[axon]..self.axon_groups[axon + 1]
    }

    pub fn group(&self, index: u32) -> DelayGroup {
        self.groups[index as usize]
    }

    pub fn group_source(&self, index: u32) -> Gid {
        self.source_of_group[index as usize]
    }

    /// Synapses reached by `source` with exactly `delay`.
    pub fn lookup(&self, source: Gid, delay: u8) -> &[Synapse] {
        let Some(axon) = self.axon(source) else { return &[] };
        self.groups_of_axon(axon)
            .map(|g| self.groups[g as usize])
            .find(|g| g.delay == delay)
            .map_or(&[], |g| &self.synapses[g.start as usize..g.end as usize])
    }

    /// Indices of the excitatory synapses converging on local neuron `target`.
    pub fn excitatory_into(&self, target: u32) -> &[u32] {
        let t = target as usize;
        &self.by_target[self.by_target_offsets[t] as usize..self.by_target_offsets[t + 1] as usize]
    }

    /// [`Self::excitatory_into`] together with mutable access to the synapses.
    pub fn excitatory_into_mut(&mut self, target: u32) -> (&[u32], &mut [Synapse]) {
        let t = target as usize;
        let idx = &self.by_target[self.by_target_offsets[t] as usize..self.by_target_offsets[t + 1] as usize];
        (idx, &mut self.synapses)
    }
}
