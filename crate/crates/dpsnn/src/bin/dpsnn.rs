use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dpsnn::{ExperimentConfig, HarnessError, ScalingMode};

#[derive(Parser, Debug)]
#[command(name = "dpsnn", version, about = "Distributed plastic spiking network simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// `key = value` configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker counts, comma separated
    #[arg(long, global = true)]
    workers: Option<String>,
    /// Column grid, e.g. `4x4`
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Simulated milliseconds before measurement starts
    #[arg(long, global = true)]
    warmup_ms: Option<u32>,
    /// Simulated milliseconds that are measured and reported
    #[arg(long, global = true)]
    measure_ms: Option<u32>,
    /// Insert a barrier before each spike exchange
    #[arg(long, global = true)]
    barrier: bool,
    /// Override any configuration key; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single run on the first worker count
    Run,
    /// Strong or weak scaling sweep
    Scale {
        #[arg(long, value_enum)]
        mode: Mode,
    },
    /// Synapses-per-neuron sweep at constant total synapses
    Msweep {
        /// Values of M, comma separated
        #[arg(long)]
        m_list: Option<String>,
    },
    /// Compare rasters across worker counts
    Verify {
        /// Use this seed for the last run (negative control)
        #[arg(long)]
        perturb_seed: Option<u64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Strong,
    Weak,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let c = &cli.common;
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &c.config {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::config("config", format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    let mut flags: Vec<String> = Vec::new();
    if let Some(s) = c.seed {
        flags.push(format!("seed={s}"));
    }
    if let Some(o) = &c.out {
        flags.push(format!("output_dir={}", o.display()));
    }
    if let Some(w) = &c.workers {
        flags.push(format!("workers={w}"));
    }
    if let Some(g) = &c.grid {
        let (x, y) = g.split_once(['x', 'X']).ok_or_else(|| HarnessError::config("grid", "expected CFXxCFY"))?;
        flags.push(format!("grid_x={x}"));
        flags.push(format!("grid_y={y}"));
    }
    if let Some(w) = c.warmup_ms {
        flags.push(format!("warmup_ms={w}"));
    }
    if let Some(m) = c.measure_ms {
        flags.push(format!("measure_ms={m}"));
    }
    if c.barrier {
        flags.push("barrier=true".into());
    }
    if let Command::Msweep { m_list: Some(m) } = &cli.command {
        flags.push(format!("m_list={m}"));
    }
    cfg.apply_overrides(flags.iter().map(String::as_str))?;
    cfg.apply_overrides(c.set.iter().map(String::as_str))?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), HarnessError> {
    let cfg = resolve(cli)?;
    match &cli.command {
        Command::Run => {
            let (outcome, record) = dpsnn::run_single(&cfg)?;
            println!("{}", dpsnn::ScalingRecord::HEADER);
            println!("{}", record.row());
            println!("# {} spikes written to {}", outcome.observables.spikes.len(), cfg.output_dir.display());
        }
        Command::Scale { mode } => {
            let mode = match mode {
                Mode::Strong => ScalingMode::Strong,
                Mode::Weak => ScalingMode::Weak,
            };
            let records = dpsnn::run_scaling(&cfg, mode)?;
            println!("{}", dpsnn::ScalingRecord::HEADER);
            for r in &records {
                println!("{}", r.row());
            }
        }
        Command::Msweep { .. } => {
            let rows = dpsnn::run_msweep(&cfg)?;
            println!("m\trate_hz\tper_synapse_s\tnormalized_s\trelative");
            for r in &rows {
                println!(
                    "{}\t{:.3}\t{:.4e}\t{:.4e}\t{:.3}",
                    r.m,
                    r.record.rate_hz,
                    r.per_synapse(),
                    r.record.normalized(),
                    r.relative
                );
            }
        }
        Command::Verify { perturb_seed } => {
            let report = dpsnn::verify_determinism(&cfg, *perturb_seed)?;
            for r in &report.runs {
                println!("H={}\tseed={}\tspikes={}\t{}", r.workers, r.seed, r.spikes, r.raster.display());
            }
            if let Some((h, at)) = report.divergence {
                return Err(HarnessError::Determinism(format!(
                    "raster for H={h} diverges first at t={} gid={}",
                    at.t, at.gid
                )));
            }
            println!("PASS: {} rasters identical", report.runs.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
