//! Spawns one engine per worker thread, runs warmup and measurement, and
//! merges the per-worker reports.

use std::time::{Duration, Instant};

use dpsnn_core::{
    BlockTimerReport, Clock, ConnectivityMask, Engine, Error as CoreError, Fabric, FabricError, LoopbackFabric,
    Observables, PartitionPlan, SimConfig, WorkerReport,
};

use crate::error::HarnessError;
use crate::fabric::ThreadedFabric;
use crate::output::ScalingRecord;

/// Wall clock in nanoseconds since construction; reads 0 when disabled.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock {
    origin: Option<Instant>,
}

impl MonotonicClock {
    pub fn new() -> Self {
        Self { origin: Some(Instant::now()) }
    }

    pub fn disabled() -> Self {
        Self { origin: None }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now_ns(&self) -> u64 {
        self.origin.map_or(0, |o| o.elapsed().as_nanos() as u64)
    }
}

#[derive(Debug, Clone)]
pub struct RunPlan {
    pub sim: SimConfig,
    pub workers: u32,
    pub warmup_ms: u32,
    pub measure_ms: u32,
    pub profile: bool,
    pub timeout: Duration,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Merged observables in canonical order.
    pub observables: Observables,
    /// Per-block maximum across workers, measured window only.
    pub timers: BlockTimerReport,
    /// Per-worker reports with their observables moved into `observables`.
    pub reports: Vec<WorkerReport>,
    pub construct_wall_s: f64,
    /// Slowest worker's wall time over the measured window.
    pub measure_wall_s: f64,
    pub neurons: u64,
    pub synapses: u64,
    pub workers: u32,
    pub measure_ms: u32,
}

impl RunOutcome {
    pub fn mean_rate_hz(&self) -> f64 {
        self.observables.mean_rate_hz(self.neurons)
    }

    pub fn connectivity(&self) -> ConnectivityMask {
        let rows: Vec<Vec<u64>> = self.reports.iter().map(|r| r.outgoing_synapses.clone()).collect();
        ConnectivityMask::from_outgoing_rows(&rows)
    }

    pub fn scaling_record(&self, label: impl Into<String>) -> ScalingRecord {
        ScalingRecord {
            label: label.into(),
            synapses: self.synapses,
            neurons: self.neurons,
            workers: self.workers,
            rate_hz: self.mean_rate_hz(),
            sim_seconds: self.measure_ms as f64 / 1000.0,
            wall_seconds: self.measure_wall_s,
        }
    }
}

struct WorkerResult {
    report: WorkerReport,
    construct: Duration,
    measure: Duration,
}

fn drive<F: Fabric>(plan: &RunPlan, partition: PartitionPlan, fabric: F) -> Result<WorkerResult, CoreError> {
    let clock = if plan.profile { MonotonicClock::new() } else { MonotonicClock::disabled() };
    let start = Instant::now();
    let mut engine = Engine::construct(plan.sim.clone(), partition, fabric, clock)?;
    let construct = start.elapsed();
    for _ in 0..plan.warmup_ms {
        engine.step()?;
    }
    engine.begin_measurement(plan.measure_ms);
    let start = Instant::now();
    for _ in 0..plan.measure_ms {
        engine.step()?;
    }
    let measure = start.elapsed();
    Ok(WorkerResult { report: engine.finish(), construct, measure })
}

/// Errors caused by a peer going away rank after the error that made it go.
fn severity(e: &CoreError) -> u8 {
    match e {
        CoreError::Fabric(FabricError::Disconnected { .. }) => 0,
        CoreError::Fabric(FabricError::Timeout { .. }) => 1,
        _ => 2,
    }
}

/// Runs the network on `plan.workers` workers and merges their reports.
pub fn run_network(plan: &RunPlan) -> Result<RunOutcome, HarnessError> {
    let grid = &plan.sim.connectome.grid;
    let partition = PartitionPlan::new(grid, plan.workers)?;
    let started = Instant::now();
    let results: Vec<Result<WorkerResult, HarnessError>> = if plan.workers == 1 {
        vec![drive(plan, partition, LoopbackFabric::new()).map_err(HarnessError::from)]
    } else {
        let mesh = ThreadedFabric::mesh(plan.workers as usize, plan.timeout);
        std::thread::scope(|s| {
            let handles: Vec<_> = mesh
                .into_iter()
                .map(|fabric| {
                    std::thread::Builder::new()
                        .name(format!("worker-{}", fabric.rank()))
                        .spawn_scoped(s, move || drive(plan, partition, fabric))
                        .expect("spawn worker thread")
                })
                .collect();
            handles
                .into_iter()
                .enumerate()
                .map(|(w, h)| match h.join() {
                    Ok(r) => r.map_err(HarnessError::from),
                    Err(_) => Err(HarnessError::WorkerPanic { worker: w as u32 }),
                })
                .collect()
        })
    };
    log::debug!("{} workers finished in {:.3} s", plan.workers, started.elapsed().as_secs_f64());

    let mut ok = Vec::with_capacity(results.len());
    let mut worst: Option<HarnessError> = None;
    for r in results {
        match r {
            Ok(w) => ok.push(w),
            Err(e) => {
                let rank = |e: &HarnessError| match e {
                    HarnessError::Engine(c) => severity(c),
                    _ => 3,
                };
                if worst.as_ref().is_none_or(|w| rank(&e) > rank(w)) {
                    worst = Some(e);
                }
            }
        }
    }
    if let Some(e) = worst {
        return Err(e);
    }

    let construct_wall_s = ok.iter().map(|w| w.construct.as_secs_f64()).fold(0.0, f64::max);
    let measure_wall_s = ok.iter().map(|w| w.measure.as_secs_f64()).fold(0.0, f64::max);
    let mut reports: Vec<WorkerReport> = ok.into_iter().map(|w| w.report).collect();
    let observables = Observables::merge(reports.iter_mut().map(|r| std::mem::take(&mut r.observables)));
    let timers = BlockTimerReport::max_across(reports.iter().map(|r| &r.timers));
    Ok(RunOutcome {
        observables,
        timers,
        construct_wall_s,
        measure_wall_s,
        neurons: grid.total_neurons(),
        synapses: reports.iter().map(|r| r.stored_synapses).sum(),
        workers: plan.workers,
        measure_ms: plan.measure_ms,
        reports,
    })
}
