//! Plain-text, tab-separated output files.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use dpsnn_core::observe::WeightHistogram;
use dpsnn_core::{BlockTimerReport, RateBins, Spike, TraceSample};

use crate::error::HarnessError;

pub const RASTER_FILE: &str = "raster.tsv";
pub const PROFILE_FILE: &str = "profile.tsv";
pub const RATES_FILE: &str = "rates.tsv";
pub const TRACES_FILE: &str = "traces.tsv";
pub const WEIGHTS_FILE: &str = "weights.tsv";
pub const SCALING_FILE: &str = "scaling.tsv";
pub const CONFIG_FILE: &str = "config.resolved";

/// One row of a scaling table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRecord {
    pub label: String,
    pub synapses: u64,
    pub neurons: u64,
    pub workers: u32,
    pub rate_hz: f64,
    pub sim_seconds: f64,
    pub wall_seconds: f64,
}

impl ScalingRecord {
    pub const HEADER: &'static str =
        "label\tsynapses\tneurons\tworkers\trate_hz\tsim_s\twall_s\twall_per_sim_s\tnormalized_s\tnormalized_per_worker_s";

    pub fn wall_per_sim_second(&self) -> f64 {
        self.wall_seconds / self.sim_seconds
    }

    /// Wall seconds per synapse, per Hz of firing rate, per simulated second.
    pub fn normalized(&self) -> f64 {
        self.wall_seconds / (self.rate_hz * self.synapses as f64 * self.sim_seconds)
    }

    /// [`Self::normalized`] with the synapses of one worker in place of the total.
    pub fn normalized_per_worker(&self) -> f64 {
        self.normalized() * self.workers as f64
    }

    pub fn row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{:.6}\t{}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}",
            self.label,
            self.synapses,
            self.neurons,
            self.workers,
            self.rate_hz,
            self.sim_seconds,
            self.wall_seconds,
            self.wall_per_sim_second(),
            self.normalized(),
            self.normalized_per_worker()
        )
    }
}

pub fn write_raster(out: &mut impl Write, spikes: &[Spike]) -> io::Result<()> {
    writeln!(out, "time_ms\tgid")?;
    for s in spikes {
        writeln!(out, "{}\t{}", s.t, s.gid)?;
    }
    Ok(())
}

/// `(block, seconds, percent)` rows followed by comment lines with the loop
/// total and the share of loop time outside any block.
pub fn write_profile(out: &mut impl Write, timers: &BlockTimerReport) -> io::Result<()> {
    writeln!(out, "block\tseconds\tpercent")?;
    for (block, secs, pct) in timers.rows() {
        writeln!(out, "{}\t{:.6}\t{:.2}", block.label(), secs, pct)?;
    }
    writeln!(out, "# loop_seconds\t{:.6}", timers.loop_ns as f64 * 1e-9)?;
    writeln!(out, "# untracked_percent\t{:.3}", timers.residue_fraction() * 100.0)?;
    writeln!(out, "# steps\t{}", timers.steps)
}

pub fn write_rates(out: &mut impl Write, rates: &RateBins, neurons_per_column: u32) -> io::Result<()> {
    writeln!(out, "column\tbin_start_ms\tspikes\trate_hz")?;
    let scale = 1000.0 / (rates.bin_ms as f64 * neurons_per_column as f64);
    for c in 0..rates.columns {
        for b in 0..rates.bins {
            let n = rates.count(c, b);
            writeln!(out, "{}\t{}\t{}\t{:.4}", c, rates.start_ms + b * rates.bin_ms, n, n as f64 * scale)?;
        }
    }
    Ok(())
}

pub fn write_traces(out: &mut impl Write, traces: &[TraceSample]) -> io::Result<()> {
    writeln!(out, "time_ms\tgid\tv\tu")?;
    for s in traces {
        writeln!(out, "{}\t{}\t{}\t{}", s.t, s.gid, s.v, s.u)?;
    }
    Ok(())
}

pub fn write_weights(out: &mut impl Write, hist: &WeightHistogram) -> io::Result<()> {
    writeln!(out, "bin_lo\tbin_hi\tcount")?;
    let n = hist.counts.len().max(1) as f64;
    let width = (hist.hi - hist.lo) / n;
    for (i, c) in hist.counts.iter().enumerate() {
        let lo = hist.lo + width * i as f64;
        writeln!(out, "{:.4}\t{:.4}\t{}", lo, lo + width, c)?;
    }
    Ok(())
}

pub fn write_scaling(out: &mut impl Write, records: &[ScalingRecord]) -> io::Result<()> {
    writeln!(out, "{}", ScalingRecord::HEADER)?;
    for r in records {
        writeln!(out, "{}", r.row())?;
    }
    Ok(())
}

/// Creates `path` and hands a buffered writer to `body`.
pub fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> Result<(), HarnessError> {
    let wrap = |e| HarnessError::io(path, e);
    let file = fs::File::create(path).map_err(wrap)?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(wrap)?;
    w.flush().map_err(wrap)
}

pub fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dpsnn_core::Block;

    #[test]
    fn raster_format() {
        let mut buf = Vec::new();
        write_raster(&mut buf, &[Spike { t: 3, gid: 1 }, Spike { t: 3, gid: 40 }, Spike { t: 9, gid: 0 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "time_ms\tgid\n3\t1\n3\t40\n9\t0\n");
    }

    #[test]
    fn normalized_time_is_recomputable_from_the_row() {
        let r = ScalingRecord {
            label: "4x4".into(),
            synapses: 3_200_000,
            neurons: 16_000,
            workers: 4,
            rate_hz: 25.0,
            sim_seconds: 2.0,
            wall_seconds: 12.5,
        };
        let row = r.row();
        let f: Vec<&str> = row.split('\t').collect();
        assert_eq!(f.len(), ScalingRecord::HEADER.split('\t').count());
        let num = |i: usize| f[i].parse::<f64>().unwrap();
        let recomputed = num(6) / (num(4) * num(1) * num(5));
        assert!((recomputed - num(8)).abs() <= 1e-5 * num(8));
        assert!((num(9) - num(8) * num(3)).abs() <= 1e-5 * num(9));
        assert!(r.normalized() > 0.0);
        assert_eq!(r.wall_per_sim_second(), 6.25);
    }

    #[test]
    fn profile_rows() {
        let mut t = BlockTimerReport::new(false);
        t.add(Block::NeuralDynamics, 3_000);
        t.add(Block::CurrentsLtd, 1_000);
        t.loop_ns = 4_100;
        let mut buf = Vec::new();
        write_profile(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 9);
        assert!(rows.iter().any(|r| r.starts_with("Ordinary neural dynamic\t") && r.ends_with("\t75.00")));
        assert!(!text.contains("Barrier"));
    }

    #[test]
    fn weights_cover_range() {
        let mut h = WeightHistogram::new(0.0, 10.0, 4);
        h.record(0.0);
        h.record(10.0);
        let mut buf = Vec::new();
        write_weights(&mut buf, &h).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.contains("7.5000\t10.0000\t1"));
    }
}
