//! Acceptance suite. Runs every criterion in sequence and prints one
//! PASS/FAIL line each; exits nonzero if any criterion fails.
//!
//! Criterion 8 is defined for hosts with at least four cores. On smaller
//! hosts it still runs and reports its measurements and verdict, but the
//! verdict does not affect the exit status.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dpsnn::{run_msweep, run_network, verify_determinism, ExperimentConfig, RunOutcome, RunPlan};
use dpsnn_core::connectome::project_into;
use dpsnn_core::model::{membrane_substep, stdp_delta};
use dpsnn_core::rng::stateless_uniform;
use dpsnn_core::*;

type Criterion = (u32, &'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
    /// `false` when the host does not meet the criterion's stated precondition.
    binding: bool,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into(), binding: true }
}

fn quiet_run(sim: SimConfig, workers: u32, warmup_ms: u32, measure_ms: u32) -> RunOutcome {
    run_network(&RunPlan { sim, workers, warmup_ms, measure_ms, profile: false, timeout: Duration::from_secs(300) })
        .expect("run")
}

fn defaults(grid: GridSpec) -> SimConfig {
    ExperimentConfig::default().sim_config_for(grid).expect("shipped defaults are valid")
}

fn determinism(grid: &str, workers: &str) -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    let (x, y) = grid.split_once('x').unwrap();
    cfg.apply_overrides([
        format!("grid_x={x}").as_str(),
        &format!("grid_y={y}"),
        &format!("workers={workers}"),
        "seed=20240521",
        "warmup_ms=500",
        "measure_ms=1000",
    ])
    .unwrap();
    cfg.output_dir = dir.path().to_path_buf();
    let report = verify_determinism(&cfg, None).expect("verify");
    let bytes: Vec<Vec<u8>> = report.runs.iter().map(|r| fs::read(&r.raster).unwrap()).collect();
    let identical = bytes.iter().all(|b| *b == bytes[0]);
    let spikes = report.runs[0].spikes;
    verdict(
        identical && report.passed() && spikes > 0,
        format!("{grid} grid, H={workers}: {spikes} spikes, {} byte rasters identical={identical}", bytes[0].len()),
    )
}

fn c1() -> Verdict {
    determinism("2x2", "1,2,4,8")
}

fn c2() -> Verdict {
    determinism("1x1", "1,8")
}

fn c3() -> Verdict {
    let spec = ConnectomeSpec::new(GridSpec::with_size(4, 4)).unwrap();
    let g = &spec.grid;
    let mut total = 0u64;
    let mut ring_ok = true;
    let mut inh_delay_ok = true;
    let mut delay_range_ok = true;
    let mut v = Vec::new();
    for src in 0..g.total_neurons() as u32 {
        v.clear();
        project_into(&spec, src, &mut v).unwrap();
        total += v.len() as u64;
        delay_range_ok &= v.iter().all(|s| (1..=20).contains(&s.delay));
        if !g.is_excitatory(src) {
            inh_delay_ok &= v.iter().all(|s| s.delay == 1);
            continue;
        }
        let (sx, sy) = (g.column_of(src) % 4, g.column_of(src) / 4);
        let mut rings = [0u32; 4];
        let mut per_column = BTreeMap::new();
        for s in &v {
            let c = g.column_of(s.target_gid);
            *per_column.entry(c).or_insert(0u32) += 1;
            let signed = |d: u32| -> i32 { [0, 1, 2, -1][d as usize] };
            let dx = signed((c % 4 + 4 - sx) % 4).abs();
            let dy = signed((c / 4 + 4 - sy) % 4).abs();
            let ring = match (dx.min(dy), dx.max(dy)) {
                (0, 0) => 0,
                (0, 1) => 1,
                (1, 1) => 2,
                (0, 2) => 3,
                _ => {
                    ring_ok = false;
                    continue;
                }
            };
            rings[ring] += 1;
        }
        ring_ok &= rings == [152, 24, 16, 8];
        // ring 1 and 2 columns are distinct on a 4x4 torus; ring 3 offsets +2 and -2 coincide
        let mut sorted: Vec<u32> = per_column.values().copied().collect();
        sorted.sort_unstable();
        ring_ok &= sorted == [4, 4, 4, 4, 4, 4, 6, 6, 6, 6, 152];
    }
    let built = quiet_run(SimConfig::new(spec.clone()), 1, 0, 1).synapses;
    verdict(
        total == 3_200_000 && built == 3_200_000 && ring_ok && inh_delay_ok && delay_range_ok,
        format!(
            "generated {total}, stored {built}, ring tallies ok={ring_ok}, inhibitory delay 1 ok={inh_delay_ok}, delays in [1,20] ok={delay_range_ok}"
        ),
    )
}

fn c4() -> Verdict {
    let out = quiet_run(defaults(GridSpec::default()), 1, 2000, 2000);
    let rate = out.mean_rate_hz();
    let bins = out.observables.rates.per_bin_totals();
    let empty = bins.iter().filter(|&&b| b == 0).count();
    verdict(
        (10.0..=40.0).contains(&rate) && bins.len() == 20 && empty == 0,
        format!("mean rate {rate:.2} Hz over 2-4 s, {} bins, {empty} empty (min {} spikes)", bins.len(), bins.iter().min().unwrap()),
    )
}

fn c5() -> Verdict {
    fn oracle(v: f64, u: f64, a: f64, b: f64, i: f64, h: f64) -> (f64, f64) {
        let dv = 0.04 * v * v + 5.0 * v + 140.0 - u + i;
        let du = a * (b * v - u);
        (v + h * dv, u + h * du)
    }
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for k in 0..10_000u64 {
        let r = |j: u64| stateless_uniform(0xACCE, &[k, j]);
        let p = if k % 2 == 0 { IzhikevichParams::RS } else { IzhikevichParams::FS };
        let (v, u, i) = (-90.0 + 119.0 * r(0), -20.0 + 40.0 * r(1), -40.0 + 80.0 * r(2));
        let s = membrane_substep(NeuronState { v, u, last_spike_time: None }, &p, i, 0.5).unwrap();
        let (ov, ou) = oracle(v, u, p.a, p.b, i, 0.5);
        worst = worst.max(rel(s.v, ov)).max(rel(s.u, ou));
    }
    let p = StdpParams::default();
    let d = 6.0;
    let at = |t: f64| stdp_delta(100.0 + d + t, 100.0, d, &p);
    let stdp_ok = at(0.0) == p.a_plus
        && at(p.tau_plus) == p.a_plus * (-1.0f64).exp()
        && at(2.0 * p.tau_plus) == p.a_plus * (-2.0f64).exp()
        && at(-p.tau_minus) == p.a_minus * (-1.0f64).exp()
        && at(-2.0 * p.tau_minus) == p.a_minus * (-2.0f64).exp();
    verdict(worst <= 1e-12 && stdp_ok, format!("worst relative error {worst:.2e} over 1e4 states, STDP closed form exact={stdp_ok}"))
}

/// Checks announced == received and zero bytes on disconnected pairs.
fn sparsity(out: &RunOutcome) -> (bool, bool, usize, u64) {
    let mask = out.connectivity();
    let mut counts_ok = true;
    let mut silent_ok = true;
    let mut payload_bytes = 0;
    for r in &out.reports {
        let t = r.rank as usize;
        counts_ok &= r.spikes_announced == r.spikes_received;
        for s in 0..mask.workers() {
            payload_bytes += r.traffic.bytes_received[s];
            if !mask.connected(s, t) {
                silent_ok &= r.traffic.bytes_received[s] == 0 && r.traffic.transfers_received[s] == 0;
                silent_ok &= out.reports[s].traffic.bytes_sent[t] == 0;
            }
        }
    }
    (counts_ok, silent_ok, mask.connected_pairs(), payload_bytes)
}

fn c6() -> Verdict {
    let torus = quiet_run(defaults(GridSpec::with_size(3, 3)), 9, 0, 500);
    let (c1, s1, pairs1, bytes1) = sparsity(&torus);
    let column = quiet_run(defaults(GridSpec::default()), 8, 0, 500);
    let (c2, s2, pairs2, bytes2) = sparsity(&column);
    let last_silent = !column.connectivity().connected(7, 7);
    verdict(
        c1 && s1 && c2 && s2 && pairs1 == 81 && pairs2 == 63 && last_silent && bytes1 > 0 && bytes2 > 0,
        format!(
            "3x3/H=9: {pairs1}/81 pairs connected, counts match={c1}, {bytes1} payload bytes; 1x1/H=8: {pairs2}/64 connected, (7,7) silent={last_silent}, counts match={c2}, disconnected bytes zero={s2}"
        ),
    )
}

fn c7() -> Verdict {
    const ROWS: [&str; 10] = [
        "Long term potentiation + after spike dynamic",
        "Barrier (optional)",
        "Communication: inter-process multicast: Spikes dim",
        "Communication: inter-process multicast: Spikes payload",
        "Axonal to synaptic spikes: intra-process multicast",
        "Add synaptic currents + long term depression",
        "Thalamic input",
        "Ordinary neural dynamic",
        "Rastergram & other statistical functions",
        "Long term synaptic plasticity",
    ];
    let mut detail = Vec::new();
    let mut ok = true;
    for barrier in [false, true] {
        let mut sim = defaults(GridSpec::default());
        sim.barrier = barrier;
        let out = run_network(&RunPlan {
            sim,
            workers: 2,
            warmup_ms: 200,
            measure_ms: 500,
            profile: true,
            timeout: Duration::from_secs(60),
        })
        .unwrap();
        let mut buf = Vec::new();
        dpsnn::output::write_profile(&mut buf, &out.timers).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<(&str, f64)> = text
            .lines()
            .skip(1)
            .filter(|l| !l.starts_with('#'))
            .map(|l| {
                let f: Vec<&str> = l.split('\t').collect();
                (f[0], f[2].parse().unwrap())
            })
            .collect();
        let names: Vec<&str> = rows.iter().map(|r| r.0).collect();
        let expected: Vec<&str> = ROWS.iter().copied().filter(|r| barrier || *r != ROWS[1]).collect();
        let sum: f64 = rows.iter().map(|r| r.1).sum();
        ok &= names == expected && (sum - 100.0).abs() <= 0.5;
        detail.push(format!("barrier={barrier}: {} rows, sum {sum:.2}%", rows.len()));
    }
    verdict(ok, detail.join("; "))
}

fn c8() -> Verdict {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let strong: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|&h| quiet_run(defaults(GridSpec::with_size(4, 4)), h, 300, 1000).measure_wall_s)
        .collect();
    let speedups = [strong[0] / strong[1], strong[1] / strong[2]];
    let strong_ok = strong[0] > strong[1] && strong[1] > strong[2] && speedups.iter().all(|&s| s >= 1.3);
    let weak: Vec<f64> = [((2, 2), 1), ((2, 4), 2), ((4, 4), 4)]
        .iter()
        .map(|&((x, y), h)| {
            let out = quiet_run(defaults(GridSpec::with_size(x, y)), h, 300, 1000);
            out.scaling_record("weak").normalized_per_worker()
        })
        .collect();
    let spread = weak.iter().cloned().fold(0.0, f64::max) / weak.iter().cloned().fold(f64::INFINITY, f64::min);
    let weak_ok = spread <= 2.0;
    Verdict {
        pass: strong_ok && weak_ok,
        detail: format!(
            "{cores} core(s); strong 4x4 wall {:.2}/{:.2}/{:.2} s, speedups {:.2}, {:.2}; weak per-worker normalized spread x{spread:.2}",
            strong[0], strong[1], strong[2], speedups[0], speedups[1]
        ),
        binding: cores >= 4,
    }
}

fn c9() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.apply_overrides(["m_list=100,1000", "msweep_total_synapses=1000000", "warmup_ms=500", "measure_ms=1000"]).unwrap();
    cfg.output_dir = dir.path().to_path_buf();
    let rows = run_msweep(&cfg).unwrap();
    let (m100, m1000) = (&rows[0], &rows[1]);
    verdict(
        m1000.record.normalized() <= m100.record.normalized(),
        format!(
            "normalized per-synapse time M=100 {:.3e} ({:.1} Hz), M=1000 {:.3e} ({:.1} Hz), relative {:.2}; raw per-synapse {:.3e} vs {:.3e}",
            m100.record.normalized(),
            m100.record.rate_hz,
            m1000.record.normalized(),
            m1000.record.rate_hz,
            m1000.relative,
            m100.per_synapse(),
            m1000.per_synapse()
        ),
    )
}

fn c10() -> Verdict {
    let mut detail = Vec::new();
    let mut ok = true;
    for h in [1, 4] {
        let mut sim = defaults(GridSpec::default());
        sim.plasticity = false;
        let out = quiet_run(sim, h, 0, 520);
        let spikes = out.observables.spikes.iter().filter(|s| s.t < 500).count() as u64;
        let mut by_emission = vec![0u64; 500];
        for r in &out.reports {
            for (t, n) in r.deliveries_by_emission.iter().enumerate().take(500) {
                by_emission[t] += n;
            }
        }
        let delivered: u64 = by_emission.iter().sum();
        ok &= spikes > 0 && delivered == spikes * 200;
        detail.push(format!("H={h}: {spikes} spikes x 200 = {}, delivered {delivered}", spikes * 200));
    }
    verdict(ok, detail.join("; "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "determinism across partitions", c1),
        (2, "fractional-column determinism", c2),
        (3, "wiring invariants", c3),
        (4, "firing-rate band", c4),
        (5, "model-kernel oracles", c5),
        (6, "sparse communication", c6),
        (7, "profile completeness", c7),
        (8, "scaling trends", c8),
        (9, "synapses-per-neuron trend", c9),
        (10, "delivery accounting", c10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (n, name, f) in criteria {
        let key = format!("criterion_{n}");
        if !filter.is_empty() && !filter.iter().any(|p| key == *p || name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|_| verdict(false, "panicked"));
        let status = if v.pass { "PASS" } else { "FAIL" };
        let note = if v.binding { "" } else { " [host below stated precondition; not counted]" };
        println!("acceptance {n:>2} {name}: {status}: {} ({:.1} s){note}", v.detail, start.elapsed().as_secs_f64());
        if !v.pass && v.binding {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
