//! Experiment drivers behind the CLI subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use dpsnn_core::{GridSpec, PartitionPlan, SimConfig, Spike};

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::launch::{run_network, RunOutcome, RunPlan};
use crate::output::{self, ScalingRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingMode {
    /// Fixed grid, growing worker count.
    Strong,
    /// Grid grows with the worker count.
    Weak,
}

impl ScalingMode {
    pub fn name(self) -> &'static str {
        match self {
            ScalingMode::Strong => "strong",
            ScalingMode::Weak => "weak",
        }
    }
}

fn plan(cfg: &ExperimentConfig, sim: SimConfig, workers: u32) -> RunPlan {
    RunPlan {
        sim,
        workers,
        warmup_ms: cfg.warmup_ms,
        measure_ms: cfg.measure_ms,
        profile: cfg.profile,
        timeout: cfg.timeout(),
    }
}

fn grid_label(g: &GridSpec) -> String {
    format!("{}x{}", g.cfx, g.cfy)
}

fn write_config_echo(cfg: &ExperimentConfig) -> Result<(), HarnessError> {
    output::ensure_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join(output::CONFIG_FILE);
    fs::write(&path, cfg.render()).map_err(|e| HarnessError::io(path, e))
}

/// Writes every observable of `outcome` into `dir`.
pub fn write_observables(dir: &Path, outcome: &RunOutcome, cfg: &ExperimentConfig) -> Result<(), HarnessError> {
    let obs = &outcome.observables;
    output::write_file(&dir.join(output::RASTER_FILE), |w| output::write_raster(w, &obs.spikes))?;
    output::write_file(&dir.join(output::RATES_FILE), |w| output::write_rates(w, &obs.rates, cfg.neurons_per_column))?;
    output::write_file(&dir.join(output::WEIGHTS_FILE), |w| output::write_weights(w, &obs.weights))?;
    if !obs.traces.is_empty() {
        output::write_file(&dir.join(output::TRACES_FILE), |w| output::write_traces(w, &obs.traces))?;
    }
    if cfg.profile {
        output::write_file(&dir.join(output::PROFILE_FILE), |w| output::write_profile(w, &outcome.timers))?;
    }
    Ok(())
}

/// One run on the first configured worker count; writes observables, the
/// profile, the resolved configuration and a one-row scaling table.
pub fn run_single(cfg: &ExperimentConfig) -> Result<(RunOutcome, ScalingRecord), HarnessError> {
    let workers = *cfg.workers.first().ok_or_else(|| HarnessError::config("workers", "empty list"))?;
    let sim = cfg.sim_config()?;
    write_config_echo(cfg)?;
    let outcome = run_network(&plan(cfg, sim, workers))?;
    let record = outcome.scaling_record(grid_label(&cfg.grid()));
    write_observables(&cfg.output_dir, &outcome, cfg)?;
    output::write_file(&cfg.output_dir.join(output::SCALING_FILE), |w| {
        output::write_scaling(w, std::slice::from_ref(&record))
    })?;
    log::info!(
        "{} neurons, {} synapses, H={}: {:.2} Hz, {:.3} s wall for {} ms",
        outcome.neurons,
        outcome.synapses,
        workers,
        record.rate_hz,
        record.wall_seconds,
        cfg.measure_ms
    );
    Ok((outcome, record))
}

/// Runs a strong or weak scaling sweep. Points whose worker count cannot
/// partition the grid are skipped with a warning. Strong sweeps also check
/// that every point produced the same raster.
pub fn run_scaling(cfg: &ExperimentConfig, mode: ScalingMode) -> Result<Vec<ScalingRecord>, HarnessError> {
    let points: Vec<(GridSpec, u32)> = match mode {
        ScalingMode::Strong => cfg.workers.iter().map(|&h| (cfg.grid(), h)).collect(),
        ScalingMode::Weak => cfg
            .weak_points
            .iter()
            .map(|p| (GridSpec { cfx: p.cfx, cfy: p.cfy, ..cfg.grid() }, p.workers))
            .collect(),
    };
    write_config_echo(cfg)?;
    let mut records = Vec::new();
    let mut reference: Option<(u32, Vec<Spike>)> = None;
    for (grid, workers) in points {
        if let Err(e) = PartitionPlan::new(&grid, workers) {
            log::warn!("skipping {} on {workers} workers: {e}", grid_label(&grid));
            continue;
        }
        let sim = cfg.sim_config_for(grid.clone())?;
        let mut outcome = run_network(&plan(cfg, sim, workers))?;
        let record = outcome.scaling_record(grid_label(&grid));
        log::info!("{} H={workers}: {:.3} s, normalized {:.3e}", record.label, record.wall_seconds, record.normalized());
        if cfg.profile {
            let path = cfg.output_dir.join(format!("profile_{}_{}_h{workers}.tsv", mode.name(), record.label));
            output::write_file(&path, |w| output::write_profile(w, &outcome.timers))?;
        }
        if mode == ScalingMode::Strong {
            let spikes = std::mem::take(&mut outcome.observables.spikes);
            match &reference {
                None => reference = Some((workers, spikes)),
                Some((h0, first)) => {
                    if let Some(d) = first_divergence(first, &spikes) {
                        return Err(HarnessError::Determinism(format!(
                            "rasters for H={h0} and H={workers} differ first at t={} gid={}",
                            d.t, d.gid
                        )));
                    }
                }
            }
        }
        records.push(record);
    }
    let path = cfg.output_dir.join(format!("scaling_{}.tsv", mode.name()));
    output::write_file(&path, |w| output::write_scaling(w, &records))?;
    Ok(records)
}

/// One point of a synapses-per-neuron sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct MsweepRow {
    pub m: u32,
    pub neurons_per_column: u32,
    pub record: ScalingRecord,
    /// Normalized time relative to the first point of the sweep.
    pub relative: f64,
}

impl MsweepRow {
    /// Wall seconds per synapse per simulated second, not rate normalized.
    pub fn per_synapse(&self) -> f64 {
        self.record.wall_seconds / (self.record.synapses as f64 * self.record.sim_seconds)
    }
}

/// Configuration of one sweep point: `m` synapses per neuron, column size
/// chosen to keep the total synapse count, weights and plasticity amplitudes
/// scaled by `200 / m`, stimulus scaled with the column size.
pub fn msweep_point(cfg: &ExperimentConfig, m: u32) -> Result<SimConfig, HarnessError> {
    let columns = cfg.grid_x as u64 * cfg.grid_y as u64;
    let per_column = m as u64 * columns;
    if m == 0 || !cfg.msweep_total_synapses.is_multiple_of(per_column) {
        return Err(HarnessError::config(
            "m_list",
            format!("{} synapses cannot be split evenly at M={m} over {columns} columns", cfg.msweep_total_synapses),
        ));
    }
    let npc = u32::try_from(cfg.msweep_total_synapses / per_column)
        .map_err(|_| HarnessError::config("msweep_total_synapses", "too large"))?;
    let mut point = cfg.clone();
    point.neurons_per_column = npc;
    point.synapses_per_neuron = m;
    let s = 200.0 / m as f64;
    point.weights.excitatory *= s;
    point.weights.inhibitory *= s;
    point.stdp.w_min *= s;
    point.stdp.w_max *= s;
    point.stdp.a_plus *= s;
    point.stdp.a_minus *= s;
    let events = cfg.thalamic.events_per_ms_per_column as f64 * npc as f64 / cfg.neurons_per_column as f64;
    point.thalamic.events_per_ms_per_column = events.round().max(1.0) as u32;
    point.sim_config()
}

/// Sweeps the synapses per neuron at a constant total synapse count.
pub fn run_msweep(cfg: &ExperimentConfig) -> Result<Vec<MsweepRow>, HarnessError> {
    let workers = *cfg.workers.first().ok_or_else(|| HarnessError::config("workers", "empty list"))?;
    if cfg.m_list.is_empty() {
        return Err(HarnessError::config("m_list", "empty list"));
    }
    let sims = cfg.m_list.iter().map(|&m| msweep_point(cfg, m)).collect::<Result<Vec<_>, _>>()?;
    write_config_echo(cfg)?;
    let mut rows: Vec<MsweepRow> = Vec::new();
    for (&m, sim) in cfg.m_list.iter().zip(sims) {
        let npc = sim.connectome.grid.neurons_per_column;
        let outcome = run_network(&plan(cfg, sim, workers))?;
        let record = outcome.scaling_record(format!("M={m}"));
        let relative = rows.first().map_or(1.0, |b| record.normalized() / b.record.normalized());
        log::info!("M={m}: {:.2} Hz, normalized {:.3e}, relative {relative:.3}", record.rate_hz, record.normalized());
        rows.push(MsweepRow { m, neurons_per_column: npc, record, relative });
    }
    let path = cfg.output_dir.join("msweep.tsv");
    output::write_file(&path, |w| {
        use std::io::Write;
        writeln!(w, "m\tneurons_per_column\tsynapses\tneurons\trate_hz\twall_s\tper_synapse_s\tnormalized_s\trelative")?;
        for r in &rows {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{:.4}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.4}",
                r.m,
                r.neurons_per_column,
                r.record.synapses,
                r.record.neurons,
                r.record.rate_hz,
                r.record.wall_seconds,
                r.per_synapse(),
                r.record.normalized(),
                r.relative
            )?;
        }
        Ok(())
    })?;
    Ok(rows)
}

/// First raster entry at which two canonical rasters disagree.
pub fn first_divergence(a: &[Spike], b: &[Spike]) -> Option<Spike> {
    match a.iter().zip(b).find(|(x, y)| x != y) {
        Some((x, y)) => Some(*x.min(y)),
        None if a.len() != b.len() => a.get(b.len()).or_else(|| b.get(a.len())).copied(),
        None => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRun {
    pub workers: u32,
    pub seed: u64,
    pub raster: PathBuf,
    pub spikes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub runs: Vec<VerifyRun>,
    /// Worker count of the first mismatching run and where it diverged.
    pub divergence: Option<(u32, Spike)>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Runs every configured worker count and byte-compares the canonical
/// rasters. `perturb_seed` replaces the seed of the last run.
pub fn verify_determinism(cfg: &ExperimentConfig, perturb_seed: Option<u64>) -> Result<VerifyReport, HarnessError> {
    if cfg.workers.len() < 2 {
        return Err(HarnessError::config("workers", "verification needs at least two worker counts"));
    }
    cfg.sim_config()?;
    write_config_echo(cfg)?;
    let mut runs = Vec::new();
    let mut first: Option<(Vec<u8>, Vec<Spike>)> = None;
    let mut divergence = None;
    let last = cfg.workers.len() - 1;
    for (i, &workers) in cfg.workers.iter().enumerate() {
        let mut point = cfg.clone();
        if i == last {
            if let Some(seed) = perturb_seed {
                point.seed = seed;
            }
        }
        let outcome = run_network(&plan(cfg, point.sim_config()?, workers))?;
        let spikes = outcome.observables.spikes;
        let raster = cfg.output_dir.join(format!("raster_{i}_h{workers}.tsv"));
        output::write_file(&raster, |w| output::write_raster(w, &spikes))?;
        let bytes = fs::read(&raster).map_err(|e| HarnessError::io(&raster, e))?;
        runs.push(VerifyRun { workers, seed: point.seed, raster, spikes: spikes.len() });
        match &first {
            None => first = Some((bytes, spikes)),
            Some((ref_bytes, ref_spikes)) => {
                if divergence.is_none() && *ref_bytes != bytes {
                    let at = first_divergence(ref_spikes, &spikes).expect("different bytes imply different spikes");
                    divergence = Some((workers, at));
                }
            }
        }
    }
    Ok(VerifyReport { runs, divergence })
}
