//! Byte layouts exchanged between workers. All integers little-endian, packed.
//!
//! Every nonempty payload starts with an 8-byte batch header:
//!
//! | offset | type | field         |
//! |--------|------|---------------|
//! | 0      | u32  | source worker |
//! | 4      | u32  | record count  |
//!
//! Axonal spike record (8 bytes): `source gid: u32`, `emission time ms: u32`.
//!
//! Synapse record used while building the network (20 bytes):
//! `source gid: u32`, `target gid: u32`, `delay ms: u32`, `weight: f64`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::{Gid, TimeMs};

pub const HEADER_LEN: usize = 8;
pub const SPIKE_RECORD_LEN: usize = 8;
pub const SYNAPSE_RECORD_LEN: usize = 20;

/// AER record: which neuron fired, and when.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AxonalSpike {
    pub source: Gid,
    pub emitted_at: TimeMs,
}

/// A synapse on its way to the worker owning its target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapseWire {
    pub source: Gid,
    pub target: Gid,
    pub delay: u32,
    pub weight: f64,
}

/// Byte length of a batch carrying `count` records of `record_len` bytes.
pub fn batch_len(count: u64, record_len: usize) -> usize {
    if count == 0 {
        0
    } else {
        HEADER_LEN + count as usize * record_len
    }
}

fn header(buf: &mut Vec<u8>, source_worker: u32, count: usize) {
    buf.extend_from_slice(&source_worker.to_le_bytes());
    buf.extend_from_slice(&(count as u32).to_le_bytes());
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn check_header(bytes: &[u8], record_len: usize, source_worker: u32, count: u64) -> Result<usize> {
    if bytes.len() != batch_len(count, record_len) {
        return Err(Error::Protocol(format!(
            "batch from worker {source_worker}: {} bytes for {count} records",
            bytes.len()
        )));
    }
    if count == 0 {
        return Ok(0);
    }
    let (src, n) = (u32_at(bytes, 0), u32_at(bytes, 4));
    if src != source_worker || n as u64 != count {
        return Err(Error::Protocol(format!(
            "batch header ({src}, {n}) does not match announced ({source_worker}, {count})"
        )));
    }
    Ok(n as usize)
}

pub fn encode_spikes(source_worker: u32, spikes: &[AxonalSpike]) -> Vec<u8> {
    if spikes.is_empty() {
        return Vec::new();
    }
    let mut buf = Vec::with_capacity(batch_len(spikes.len() as u64, SPIKE_RECORD_LEN));
    header(&mut buf, source_worker, spikes.len());
    for s in spikes {
        buf.extend_from_slice(&s.source.to_le_bytes());
        buf.extend_from_slice(&s.emitted_at.to_le_bytes());
    }
    buf
}

/// Decodes a spike batch, checking it against the announced sender and count.
pub fn decode_spikes(bytes: &[u8], source_worker: u32, count: u64) -> Result<Vec<AxonalSpike>> {
    let n = check_header(bytes, SPIKE_RECORD_LEN, source_worker, count)?;
    Ok((0..n)
        .map(|i| {
            let at = HEADER_LEN + i * SPIKE_RECORD_LEN;
            AxonalSpike { source: u32_at(bytes, at), emitted_at: u32_at(bytes, at + 4) }
        })
        .collect())
}

pub fn encode_synapses(source_worker: u32, synapses: &[SynapseWire]) -> Vec<u8> {
    if synapses.is_empty() {
        return Vec::new();
    }
    let mut buf = Vec::with_capacity(batch_len(synapses.len() as u64, SYNAPSE_RECORD_LEN));
    header(&mut buf, source_worker, synapses.len());
    for s in synapses {
        buf.extend_from_slice(&s.source.to_le_bytes());
        buf.extend_from_slice(&s.target.to_le_bytes());
        buf.extend_from_slice(&s.delay.to_le_bytes());
        buf.extend_from_slice(&s.weight.to_le_bytes());
    }
    buf
}

pub fn decode_synapses(bytes: &[u8], source_worker: u32, count: u64) -> Result<Vec<SynapseWire>> {
    let n = check_header(bytes, SYNAPSE_RECORD_LEN, source_worker, count)?;
    Ok((0..n)
        .map(|i| {
            let at = HEADER_LEN + i * SYNAPSE_RECORD_LEN;
            SynapseWire {
                source: u32_at(bytes, at),
                target: u32_at(bytes, at + 4),
                delay: u32_at(bytes, at + 8),
                weight: f64::from_le_bytes(bytes[at + 12..at + 20].try_into().unwrap()),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn spike_layout_is_bit_exact() {
        let bytes = encode_spikes(2, &[AxonalSpike { source: 0x0102_0304, emitted_at: 9 }]);
        assert_eq!(bytes, vec![2, 0, 0, 0, 1, 0, 0, 0, 4, 3, 2, 1, 9, 0, 0, 0]);
        assert!(encode_spikes(2, &[]).is_empty());
        assert_eq!(batch_len(0, SPIKE_RECORD_LEN), 0);
        assert_eq!(batch_len(2, SPIKE_RECORD_LEN), 24);
    }

    #[test]
    fn header_mismatch_is_protocol_error() {
        let bytes = encode_spikes(1, &[AxonalSpike { source: 5, emitted_at: 0 }]);
        assert!(matches!(decode_spikes(&bytes, 2, 1), Err(Error::Protocol(_))));
        assert!(matches!(decode_spikes(&bytes, 1, 2), Err(Error::Protocol(_))));
        assert!(decode_spikes(&[], 1, 0).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn spikes_round_trip(w in any::<u32>(), raw in proptest::collection::vec((any::<u32>(), any::<u32>()), 0..50)) {
            let spikes: Vec<_> = raw.iter().map(|&(s, t)| AxonalSpike { source: s, emitted_at: t }).collect();
            let bytes = encode_spikes(w, &spikes);
            prop_assert_eq!(bytes.len(), batch_len(spikes.len() as u64, SPIKE_RECORD_LEN));
            prop_assert_eq!(decode_spikes(&bytes, w, spikes.len() as u64).unwrap(), spikes);
        }

        #[test]
        fn synapses_round_trip(w in any::<u32>(), raw in proptest::collection::vec((any::<u32>(), any::<u32>(), 1u32..256, -1e6f64..1e6), 0..50)) {
            let syn: Vec<_> = raw.iter().map(|&(s, t, d, x)| SynapseWire { source: s, target: t, delay: d, weight: x }).collect();
            let bytes = encode_synapses(w, &syn);
            prop_assert_eq!(decode_synapses(&bytes, w, syn.len() as u64).unwrap(), syn);
        }
    }
}
