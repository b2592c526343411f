//! Per-worker simulation kernel.
//!
//! One [`Engine`] owns a contiguous block of neurons together with all their
//! incoming synapses. Construction is a two-phase collective (synapse counts,
//! then synapse records). Each simulated millisecond then runs:
//!
//! 1. LTP on the incoming synapses of neurons that fired in the previous step;
//! 2. optional barrier, then the spike-count and spike-payload exchanges;
//! 3. enqueueing of received axonal spikes into the delay line;
//! 4. multicast of the due axonal spikes onto their `(source, delay)` groups;
//! 5. current injection in `(source gid, delay)` order, with LTD at delivery;
//! 6. thalamic stimulus;
//! 7. two 0.5 ms Euler substeps and the spike reset for every neuron.
//!
//! Fixed accumulation order makes every floating-point sum independent of the
//! number of workers, which is what keeps the raster partition-invariant.

mod queue;
mod store;
mod timer;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

pub use self::queue::SpikeQueue;
pub use self::store::{DelayGroup, IncomingSynapse, Synapse, SynapseStore, NEVER};
pub use self::timer::{Block, BlockTimerReport, Clock, NullClock};

use crate::connectome::{self, ConnectomeSpec, ThalamicSpec};
use crate::error::{Error, Result};
use crate::fabric::{Fabric, TrafficCounters};
use crate::model::{self, IzhikevichParams, NeuronState, StdpParams};
use crate::observe::{Observables, RateBins, Spike, TraceSample, WeightHistogram};
use crate::partition::PartitionPlan;
use crate::wire::{self, AxonalSpike, SynapseWire};
use crate::{Gid, TimeMs};

/// Euler substep length (ms); two substeps make one simulation step.
pub const SUBSTEP_MS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub connectome: ConnectomeSpec,
    pub excitatory: IzhikevichParams,
    pub inhibitory: IzhikevichParams,
    pub stdp: StdpParams,
    /// When false, weights stay at their initial values.
    pub plasticity: bool,
    /// How far back (ms) a post spike looks for presynaptic deliveries.
    pub ltp_lookback_ms: u32,
    pub thalamic: ThalamicSpec,
    pub barrier: bool,
    pub rate_bin_ms: u32,
    /// Neurons whose `(v, u)` is recorded every step.
    pub trace_gids: Vec<Gid>,
    pub weight_bins: u32,
}

impl SimConfig {
    pub fn new(connectome: ConnectomeSpec) -> Self {
        Self {
            connectome,
            excitatory: IzhikevichParams::RS,
            inhibitory: IzhikevichParams::FS,
            stdp: StdpParams::default(),
            plasticity: true,
            ltp_lookback_ms: 1000,
            thalamic: ThalamicSpec::default(),
            barrier: false,
            rate_bin_ms: 100,
            trace_gids: Vec::new(),
            weight_bins: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.connectome.validate()?;
        self.excitatory.validate()?;
        self.inhibitory.validate()?;
        self.stdp.validate()?;
        if self.rate_bin_ms == 0 {
            return Err(Error::config("rate_bin_ms", "must be > 0"));
        }
        if !self.thalamic.amplitude.is_finite() {
            return Err(Error::config("thalamic_amplitude", "must be finite"));
        }
        Ok(())
    }
}

/// What one call to [`Engine::step`] produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutput {
    pub t: TimeMs,
    /// Gids that fired during this step, ascending.
    pub fired: Vec<Gid>,
    /// Synaptic current injections performed during this step.
    pub delivered: u64,
}

/// Everything a worker hands back to the harness after a run.
#[derive(Debug, Clone)]
pub struct WorkerReport {
    pub rank: u32,
    pub observables: Observables,
    pub timers: BlockTimerReport,
    /// Payload traffic during the simulation phase.
    pub traffic: TrafficCounters,
    /// Payload traffic while building the network.
    pub construction_traffic: TrafficCounters,
    /// Synapses this worker's neurons project onto each worker.
    pub outgoing_synapses: Vec<u64>,
    /// Synapses received from each worker during construction.
    pub incoming_synapses: Vec<u64>,
    pub stored_synapses: u64,
    /// Spike records announced by each source worker, summed over rounds.
    pub spikes_announced: Vec<u64>,
    /// Spike records actually decoded from each source worker.
    pub spikes_received: Vec<u64>,
    /// Current injections indexed by the emission time of the causing spike.
    pub deliveries_by_emission: Vec<u64>,
    pub delivered_total: u64,
}

pub struct Engine<F, C> {
    cfg: SimConfig,
    plan: PartitionPlan,
    rank: u32,
    first_gid: Gid,
    fabric: F,
    clock: C,
    neurons: Vec<NeuronState>,
    excitatory: Vec<bool>,
    store: SynapseStore,
    /// target workers per local neuron, CSR
    fanout_offsets: Vec<u32>,
    fanout: Vec<u32>,
    outgoing_synapses: Vec<u64>,
    incoming_synapses: Vec<u64>,
    construction_traffic: TrafficCounters,
    queue: SpikeQueue,
    input: Vec<f64>,
    fired_prev: Vec<u32>,
    fired_now: Vec<u32>,
    due: Vec<u32>,
    outbox: Vec<Vec<AxonalSpike>>,
    t: TimeMs,
    timers: BlockTimerReport,
    observables: Observables,
    trace_locals: Vec<u32>,
    spikes_announced: Vec<u64>,
    spikes_received: Vec<u64>,
    deliveries_by_emission: Vec<u64>,
    delivered_total: u64,
}

impl<F: Fabric, C: Clock> Engine<F, C> {
    /// Builds this worker's share of the network. Collective: every worker of
    /// the fabric must call it with the same configuration and plan.
    pub fn construct(cfg: SimConfig, plan: PartitionPlan, mut fabric: F, clock: C) -> Result<Self> {
        cfg.validate()?;
        let grid = &cfg.connectome.grid;
        if plan.neurons() as u64 != grid.total_neurons() {
            return Err(Error::config("workers", "partition plan does not match the grid"));
        }
        if fabric.size() != plan.workers() as usize {
            return Err(Error::config("workers", "fabric size differs from the partition plan"));
        }
        let workers = fabric.size();
        let rank = fabric.rank() as u32;
        let range = plan.range_of(rank);
        let loc_n = plan.loc_n();

        // phase 1: generate forward projections, tally per target worker
        let mut outbox: Vec<Vec<SynapseWire>> = vec![Vec::new(); workers];
        let mut fanout_offsets = Vec::with_capacity(loc_n as usize + 1);
        let mut fanout = Vec::new();
        let mut scratch = Vec::with_capacity(grid.synapses_per_neuron as usize);
        let mut owners = Vec::new();
        fanout_offsets.push(0);
        for source in range.clone() {
            scratch.clear();
            connectome::project_into(&cfg.connectome, source, &mut scratch)?;
            owners.clear();
            for rec in &scratch {
                let owner = rec.target_gid / loc_n;
                outbox[owner as usize].push(SynapseWire {
                    source,
                    target: rec.target_gid,
                    delay: rec.delay as u32,
                    weight: rec.weight,
                });
                owners.push(owner);
            }
            owners.sort_unstable();
            owners.dedup();
            fanout.extend_from_slice(&owners);
            fanout_offsets.push(fanout.len() as u32);
        }
        let outgoing_synapses: Vec<u64> = outbox.iter().map(|b| b.len() as u64).collect();
        let incoming_synapses = fabric.exchange_counts(&outgoing_synapses)?;

        // phase 2: ship synapse records to the owners of their targets
        let payloads: Vec<Vec<u8>> = outbox.iter().map(|b| wire::encode_synapses(rank, b)).collect();
        drop(outbox);
        let expected: Vec<usize> = incoming_synapses
            .iter()
            .map(|&n| wire::batch_len(n, wire::SYNAPSE_RECORD_LEN))
            .collect();
        let received = fabric.exchange_payloads(payloads, &expected)?;
        let mut incoming = Vec::with_capacity(incoming_synapses.iter().sum::<u64>() as usize);
        for (s, bytes) in received.iter().enumerate() {
            for w in wire::decode_synapses(bytes, s as u32, incoming_synapses[s])? {
                if !range.contains(&w.target) {
                    return Err(Error::Protocol(format!(
                        "worker {s} sent a synapse for gid {} not owned by worker {rank}",
                        w.target
                    )));
                }
                incoming.push(IncomingSynapse {
                    source: w.source,
                    target: w.target - range.start,
                    delay: w.delay as u8,
                    excitatory: grid.is_excitatory(w.source),
                    weight: w.weight,
                });
            }
        }
        drop(received);
        let store = SynapseStore::build(loc_n, incoming);
        let construction_traffic = fabric.traffic().clone();
        fabric.reset_traffic();

        let excitatory: Vec<bool> = range.clone().map(|g| grid.is_excitatory(g)).collect();
        let neurons = excitatory
            .iter()
            .map(|&e| if e { cfg.excitatory.rest_state() } else { cfg.inhibitory.rest_state() })
            .collect();
        let trace_locals = cfg
            .trace_gids
            .iter()
            .filter(|g| range.contains(g))
            .map(|g| g - range.start)
            .collect();
        let timers = BlockTimerReport::new(cfg.barrier);
        let rates = RateBins::new(0, 0, cfg.rate_bin_ms, grid.columns());
        Ok(Self {
            queue: SpikeQueue::new(grid.delay_max),
            input: vec![0.0; loc_n as usize],
            fired_prev: Vec::new(),
            fired_now: Vec::new(),
            due: Vec::new(),
            outbox: vec![Vec::new(); workers],
            t: 0,
            timers,
            observables: Observables { rates, ..Observables::default() },
            trace_locals,
            spikes_announced: vec![0; workers],
            spikes_received: vec![0; workers],
            deliveries_by_emission: Vec::new(),
            delivered_total: 0,
            first_gid: range.start,
            cfg,
            plan,
            rank,
            fabric,
            clock,
            neurons,
            excitatory,
            store,
            fanout_offsets,
            fanout,
            outgoing_synapses,
            incoming_synapses,
            construction_traffic,
        })
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn plan(&self) -> &PartitionPlan {
        &self.plan
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Time of the next step to run.
    pub fn now(&self) -> TimeMs {
        self.t
    }

    pub fn store(&self) -> &SynapseStore {
        &self.store
    }

    pub fn fabric(&self) -> &F {
        &self.fabric
    }

    pub fn outgoing_synapses(&self) -> &[u64] {
        &self.outgoing_synapses
    }

    pub fn incoming_synapses(&self) -> &[u64] {
        &self.incoming_synapses
    }

    pub fn owns(&self, gid: Gid) -> bool {
        self.plan.range_of(self.rank).contains(&gid)
    }

    pub fn neuron_state(&self, gid: Gid) -> Option<NeuronState> {
        self.owns(gid).then(|| self.neurons[(gid - self.first_gid) as usize])
    }

    /// Overwrites a neuron's state; used to drive probes and tests.
    pub fn set_neuron_state(&mut self, gid: Gid, state: NeuronState) -> bool {
        if !self.owns(gid) {
            return false;
        }
        self.neurons[(gid - self.first_gid) as usize] = state;
        true
    }

    /// Total input current the neuron received during the last step.
    pub fn input_current(&self, gid: Gid) -> Option<f64> {
        self.owns(gid).then(|| self.input[(gid - self.first_gid) as usize])
    }

    pub fn timers(&self) -> &BlockTimerReport {
        &self.timers
    }

    fn params(&self, local: usize) -> &IzhikevichParams {
        if self.excitatory[local] {
            &self.cfg.excitatory
        } else {
            &self.cfg.inhibitory
        }
    }

    /// Runs one millisecond. Collective across workers.
    pub fn step(&mut self) -> Result<StepOutput> {
        let t = self.t;
        let loop_start = self.clock.now_ns();
        let mut mark = loop_start;
        let clock = &self.clock;
        let mut lap = |timers: &mut BlockTimerReport, block: Block| {
            let now = clock.now_ns();
            timers.add(block, now.saturating_sub(mark));
            mark = now;
        };

        // LTP for the neurons that fired at t - 1
        if self.cfg.plasticity && t > 0 {
            let t_post = (t - 1) as f64;
            let lookback = self.cfg.ltp_lookback_ms;
            for &local in &self.fired_prev {
                let (incoming, synapses) = self.store.excitatory_into_mut(local);
                for &idx in incoming {
                    let s = &mut synapses[idx as usize];
                    if s.last_delivery != NEVER && (t - 1) - s.last_delivery <= lookback {
                        let d = s.delay as f64;
                        let t_pre = s.last_delivery as f64 - d;
                        s.delta += model::stdp_delta(t_post, t_pre, d, &self.cfg.stdp);
                    }
                }
            }
        }
        lap(&mut self.timers, Block::LtpPostSpike);

        if self.cfg.barrier {
            self.fabric.barrier()?;
            lap(&mut self.timers, Block::Barrier);
        }

        // AER batches of the t - 1 spikes, one per connected target worker
        for b in &mut self.outbox {
            b.clear();
        }
        for &local in &self.fired_prev {
            let l = local as usize;
            let spike = AxonalSpike { source: self.first_gid + local, emitted_at: t - 1 };
            for &w in &self.fanout[self.fanout_offsets[l] as usize..self.fanout_offsets[l + 1] as usize] {
                self.outbox[w as usize].push(spike);
            }
        }
        let counts: Vec<u64> = self.outbox.iter().map(|b| b.len() as u64).collect();
        let announced = self.fabric.exchange_counts(&counts)?;
        lap(&mut self.timers, Block::SpikesDim);

        let payloads: Vec<Vec<u8>> = self.outbox.iter().map(|b| wire::encode_spikes(self.rank, b)).collect();
        let expected: Vec<usize> =
            announced.iter().map(|&n| wire::batch_len(n, wire::SPIKE_RECORD_LEN)).collect();
        let received = self.fabric.exchange_payloads(payloads, &expected)?;
        let mut arrived = Vec::new();
        for (s, bytes) in received.iter().enumerate() {
            let spikes = wire::decode_spikes(bytes, s as u32, announced[s])?;
            self.spikes_announced[s] += announced[s];
            self.spikes_received[s] += spikes.len() as u64;
            arrived.extend(spikes);
        }
        lap(&mut self.timers, Block::SpikesPayload);

        // enqueue per delay group, then pop what is due now
        for spike in &arrived {
            let axon = self.store.axon(spike.source).ok_or_else(|| {
                Error::Protocol(format!("spike from gid {} which has no synapse here", spike.source))
            })?;
            for g in self.store.groups_of_axon(axon) {
                let due = spike.emitted_at + self.store.group(g).delay as TimeMs;
                self.queue.push(due, g);
            }
        }
        debug_assert_eq!(self.queue.now(), t);
        self.queue.pop_due(&mut self.due);
        self.due.sort_unstable();
        lap(&mut self.timers, Block::IntraProcessMulticast);

        // currents in (source, delay) order, LTD at delivery
        self.input.fill(0.0);
        let mut delivered = 0u64;
        let plastic = self.cfg.plasticity;
        for &g in &self.due {
            let group = self.store.group(g);
            let emitted = t - group.delay as TimeMs;
            let n = (group.end - group.start) as u64;
            let synapses = &mut self.store.synapses_mut()[group.start as usize..group.end as usize];
            for s in synapses {
                let target = s.target as usize;
                self.input[target] += s.weight;
                if plastic && s.excitatory {
                    if let Some(t_post) = self.neurons[target].last_spike_time {
                        let d = s.delay as f64;
                        s.delta += model::stdp_delta(t_post, emitted as f64, d, &self.cfg.stdp);
                    }
                }
                s.last_delivery = t;
            }
            delivered += n;
            let slot = emitted as usize;
            if self.deliveries_by_emission.len() <= slot {
                self.deliveries_by_emission.resize(slot + 1, 0);
            }
            self.deliveries_by_emission[slot] += n;
        }
        self.delivered_total += delivered;
        lap(&mut self.timers, Block::CurrentsLtd);

        let grid = &self.cfg.connectome.grid;
        let range = self.plan.range_of(self.rank);
        for column in self.plan.columns_of(self.rank) {
            for (gid, amp) in connectome::thalamic_events(grid, &self.cfg.thalamic, t, column) {
                if range.contains(&gid) {
                    self.input[(gid - range.start) as usize] += amp;
                }
            }
        }
        lap(&mut self.timers, Block::Thalamic);

        self.fired_now.clear();
        for local in 0..self.neurons.len() {
            let params = *self.params(local);
            let input = self.input[local];
            let diverged = |_| Error::NumericDivergence { gid: Some(self.first_gid + local as Gid), t: Some(t) };
            let mut s = model::membrane_substep(self.neurons[local], &params, input, SUBSTEP_MS).map_err(diverged)?;
            if s.v < params.v_peak {
                s = model::membrane_substep(s, &params, input, SUBSTEP_MS).map_err(diverged)?;
            }
            let (s, fired) = model::fire_and_reset(s, &params, t as f64);
            self.neurons[local] = s;
            if fired {
                self.fired_now.push(local as u32);
            }
        }
        lap(&mut self.timers, Block::NeuralDynamics);

        let fired: Vec<Gid> = self.fired_now.iter().map(|&l| self.first_gid + l).collect();
        for &gid in &fired {
            self.observables.spikes.push(Spike { t, gid });
            self.observables.rates.record(t, grid.column_of(gid));
        }
        for &l in &self.trace_locals {
            let s = self.neurons[l as usize];
            self.observables.traces.push(TraceSample { t, gid: self.first_gid + l, v: s.v, u: s.u });
        }
        lap(&mut self.timers, Block::Statistics);

        if plastic && (t + 1).is_multiple_of(self.cfg.stdp.consolidation_period) {
            let stdp = self.cfg.stdp;
            for s in self.store.synapses_mut().iter_mut().filter(|s| s.excitatory) {
                s.weight = model::consolidate_weight(s.weight, s.delta, &stdp);
                s.delta = 0.0;
            }
        }
        lap(&mut self.timers, Block::LongTermPlasticity);

        core::mem::swap(&mut self.fired_prev, &mut self.fired_now);
        self.t += 1;
        self.timers.loop_ns += mark.saturating_sub(loop_start);
        self.timers.steps += 1;
        Ok(StepOutput { t, fired, delivered })
    }

    /// Runs `warmup` steps, clears the timers and traffic counters, then runs
    /// `duration` measured steps. Rates cover the measured window only; the
    /// raster covers every step.
    pub fn run(&mut self, warmup: u32, duration: u32) -> Result<()> {
        for _ in 0..warmup {
            self.step()?;
        }
        self.begin_measurement(duration);
        for _ in 0..duration {
            self.step()?;
        }
        Ok(())
    }

    /// Resets timers and traffic counters and opens a rate window of
    /// `duration` ms starting now.
    pub fn begin_measurement(&mut self, duration: u32) {
        self.timers = BlockTimerReport::new(self.cfg.barrier);
        self.fabric.reset_traffic();
        let grid = &self.cfg.connectome.grid;
        self.observables.rates = RateBins::new(self.t, duration, self.cfg.rate_bin_ms, grid.columns());
    }

    /// Consumes the engine and returns its report.
    pub fn finish(mut self) -> WorkerReport {
        let stdp = &self.cfg.stdp;
        let mut weights = WeightHistogram::new(stdp.w_min, stdp.w_max, self.cfg.weight_bins);
        for s in self.store.synapses().iter().filter(|s| s.excitatory) {
            weights.record(s.weight);
        }
        self.observables.weights = weights;
        WorkerReport {
            rank: self.rank,
            observables: self.observables,
            timers: self.timers,
            traffic: self.fabric.traffic().clone(),
            construction_traffic: self.construction_traffic,
            outgoing_synapses: self.outgoing_synapses,
            incoming_synapses: self.incoming_synapses,
            stored_synapses: self.store.len() as u64,
            spikes_announced: self.spikes_announced,
            spikes_received: self.spikes_received,
            deliveries_by_emission: self.deliveries_by_emission,
            delivered_total: self.delivered_total,
        }
    }
}
