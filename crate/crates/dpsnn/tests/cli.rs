use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dpsnn::ExperimentConfig;

fn dpsnn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpsnn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn dpsnn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_outputs_and_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.cfg");
    fs::write(&cfg_path, "warmup_ms = 50\nmeasure_ms = 200\nseed = 5\ntrace_gids = 0, 801\n").unwrap();
    let out = dir.path().join("run");
    let o = dpsnn(&["run", "--config", cfg_path.to_str().unwrap(), "--set", "w_inh=-4.5"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["raster.tsv", "profile.tsv", "rates.tsv", "weights.tsv", "traces.tsv", "scaling.tsv", "config.resolved"] {
        assert!(out.join(f).exists(), "missing {f}");
    }

    let echoed = ExperimentConfig::from_text(&fs::read_to_string(out.join("config.resolved")).unwrap()).unwrap();
    let mut expected = ExperimentConfig::from_text(&fs::read_to_string(&cfg_path).unwrap()).unwrap();
    expected.output_dir = out.clone();
    expected.weights.inhibitory = -4.5;
    assert_eq!(echoed, expected);

    let raster = fs::read_to_string(out.join("raster.tsv")).unwrap();
    let mut prev = (0u32, 0u32);
    for line in raster.lines().skip(1) {
        let (t, g) = line.split_once('\t').unwrap();
        let cur = (t.parse().unwrap(), g.parse().unwrap());
        assert!(cur > prev || prev == (0, 0), "{cur:?} after {prev:?}");
        prev = cur;
    }
    let traces = fs::read_to_string(out.join("traces.tsv")).unwrap();
    assert_eq!(traces.lines().count(), 1 + 2 * 250);
    assert!(stdout(&o).contains("1x1\t200000\t1000\t1\t"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--set", "grid_x=abc"][..],
        &["run", "--set", "synapses_per_neuron=150"],
        &["run", "--set", "no_such_key=1"],
        &["run", "--workers", "3"],
        &["verify", "--workers", "1"],
        &["frobnicate"],
    ] {
        let o = dpsnn(args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = dpsnn(&["run", "--set", "grid_x=abc"], dir.path());
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid_x"));
}

#[test]
fn verify_passes_and_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--grid", "1x1", "--workers", "1,4,8", "--warmup-ms", "50", "--measure-ms", "150"];
    let o = dpsnn(&[&["verify"][..], &common].concat(), &dir.path().join("ok"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS: 3 rasters identical"));
    let a = fs::read(dir.path().join("ok/raster_0_h1.tsv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("ok/raster_2_h8.tsv")).unwrap());

    let o = dpsnn(&[&["verify", "--perturb-seed", "77"][..], &common].concat(), &dir.path().join("bad"));
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("H=8 diverges first at t="), "{err}");
}

#[test]
fn weak_sweep_skips_infeasible_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("weak");
    let o = dpsnn(
        &["scale", "--mode", "weak", "--set", "weak_points=1x1:1,1x1:3,2x1:2", "--warmup-ms", "20", "--measure-ms", "100"],
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("scaling_weak.tsv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("1x1\t200000\t1000\t1\t"));
    assert!(rows[1].starts_with("2x1\t400000\t2000\t2\t"));
}

#[test]
fn msweep_reports_relative_time() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let o = dpsnn(
        &["msweep", "--m-list", "100,200", "--set", "msweep_total_synapses=200000", "--warmup-ms", "20", "--measure-ms", "100"],
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("msweep.tsv")).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][..3], &["100", "2000", "200000"]);
    assert_eq!(&rows[1][..3], &["200", "1000", "200000"]);
    assert_eq!(rows[0][8], "1.0000");
}
