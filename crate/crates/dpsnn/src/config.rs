//! Experiment configuration: a plain `key = value` file, command-line
//! overrides, and a resolved echo that parses back to the same values.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Duration;

use dpsnn_core::{ConnectomeSpec, GridSpec, InitialWeights, IzhikevichParams, SimConfig, StdpParams, ThalamicSpec};

use crate::error::HarnessError;

/// One point of a weak-scaling sweep: a `cfx x cfy` grid on `workers` workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeakPoint {
    pub cfx: u32,
    pub cfy: u32,
    pub workers: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid_x: u32,
    pub grid_y: u32,
    pub neurons_per_column: u32,
    pub excitatory_fraction: f64,
    pub synapses_per_neuron: u32,
    pub delay_min: u32,
    pub delay_max: u32,
    pub seed: u64,
    /// Worker counts; `run` uses the first, sweeps and `verify` use all.
    pub workers: Vec<u32>,
    pub warmup_ms: u32,
    pub measure_ms: u32,
    pub output_dir: PathBuf,
    pub barrier: bool,
    pub profile: bool,
    pub plasticity: bool,
    pub trace_gids: Vec<u32>,
    pub excitatory: IzhikevichParams,
    pub inhibitory: IzhikevichParams,
    pub stdp: StdpParams,
    pub ltp_lookback_ms: u32,
    pub weights: InitialWeights,
    pub thalamic: ThalamicSpec,
    pub rate_bin_ms: u32,
    pub weight_bins: u32,
    pub weak_points: Vec<WeakPoint>,
    pub m_list: Vec<u32>,
    pub msweep_total_synapses: u64,
    pub timeout_ms: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let grid = GridSpec::default();
        Self {
            grid_x: grid.cfx,
            grid_y: grid.cfy,
            neurons_per_column: grid.neurons_per_column,
            excitatory_fraction: grid.excitatory_fraction,
            synapses_per_neuron: grid.synapses_per_neuron,
            delay_min: grid.delay_min,
            delay_max: grid.delay_max,
            seed: grid.master_seed,
            workers: vec![1],
            warmup_ms: 1000,
            measure_ms: 2000,
            output_dir: PathBuf::from("dpsnn-out"),
            barrier: false,
            profile: true,
            plasticity: true,
            trace_gids: Vec::new(),
            excitatory: IzhikevichParams::RS,
            inhibitory: IzhikevichParams::FS,
            stdp: StdpParams::default(),
            ltp_lookback_ms: 1000,
            weights: InitialWeights::default(),
            thalamic: ThalamicSpec::default(),
            rate_bin_ms: 100,
            weight_bins: 20,
            weak_points: vec![
                WeakPoint { cfx: 2, cfy: 2, workers: 1 },
                WeakPoint { cfx: 2, cfy: 4, workers: 2 },
                WeakPoint { cfx: 4, cfy: 4, workers: 4 },
            ],
            m_list: vec![100, 200, 1000],
            msweep_total_synapses: 1_000_000,
            timeout_ms: 120_000,
        }
    }
}

trait Value: Sized {
    fn parse(s: &str) -> Result<Self, String>;
    fn render(&self) -> String;
}

macro_rules! scalar_value {
    ($($t:ty),*) => {$(
        impl Value for $t {
            fn parse(s: &str) -> Result<Self, String> {
                s.parse().map_err(|e| format!("cannot parse {s:?}: {e}"))
            }
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
scalar_value!(u32, u64, f64);

impl Value for bool {
    fn parse(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "true" | "on" | "yes" | "1" => Ok(true),
            "false" | "off" | "no" | "0" => Ok(false),
            _ => Err(format!("expected a boolean, got {s:?}")),
        }
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl Value for PathBuf {
    fn parse(s: &str) -> Result<Self, String> {
        if s.is_empty() {
            return Err("empty path".into());
        }
        Ok(PathBuf::from(s))
    }
    fn render(&self) -> String {
        self.display().to_string()
    }
}

impl Value for Vec<u32> {
    fn parse(s: &str) -> Result<Self, String> {
        s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(u32::parse).collect()
    }
    fn render(&self) -> String {
        self.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
    }
}

impl Value for Vec<WeakPoint> {
    /// `2x2:1,2x4:2`
    fn parse(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(|item| {
                let bad = || format!("expected CFXxCFY:WORKERS, got {item:?}");
                let (grid, w) = item.split_once(':').ok_or_else(bad)?;
                let (x, y) = grid.split_once(['x', 'X']).ok_or_else(bad)?;
                Ok(WeakPoint {
                    cfx: u32::parse(x.trim())?,
                    cfy: u32::parse(y.trim())?,
                    workers: u32::parse(w.trim())?,
                })
            })
            .collect()
    }
    fn render(&self) -> String {
        self.iter().map(|p| format!("{}x{}:{}", p.cfx, p.cfy, p.workers)).collect::<Vec<_>>().join(",")
    }
}

macro_rules! config_keys {
    ($($key:literal => $($field:ident).+ : $t:ty),* $(,)?) => {
        /// Every recognised key, in echo order.
        pub const KEYS: &[&str] = &[$($key),*];

        impl ExperimentConfig {
            /// Sets one key from its textual value.
            pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
                let (key, value) = (key.trim(), value.trim());
                match key {
                    $($key => {
                        self.$($field).+ = <$t as Value>::parse(value).map_err(|r| HarnessError::config(key, r))?;
                    })*
                    other => return Err(HarnessError::config(other, "unknown key")),
                }
                Ok(())
            }

            /// `(key, value)` pairs covering the whole configuration.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$(($key, <$t as Value>::render(&self.$($field).+))),*]
            }
        }
    };
}

config_keys! {
    "grid_x" => grid_x: u32,
    "grid_y" => grid_y: u32,
    "neurons_per_column" => neurons_per_column: u32,
    "excitatory_fraction" => excitatory_fraction: f64,
    "synapses_per_neuron" => synapses_per_neuron: u32,
    "delay_min" => delay_min: u32,
    "delay_max" => delay_max: u32,
    "seed" => seed: u64,
    "workers" => workers: Vec<u32>,
    "warmup_ms" => warmup_ms: u32,
    "measure_ms" => measure_ms: u32,
    "output_dir" => output_dir: PathBuf,
    "barrier" => barrier: bool,
    "profile" => profile: bool,
    "plasticity" => plasticity: bool,
    "trace_gids" => trace_gids: Vec<u32>,
    "exc_a" => excitatory.a: f64,
    "exc_b" => excitatory.b: f64,
    "exc_c" => excitatory.c: f64,
    "exc_d" => excitatory.d: f64,
    "exc_v_peak" => excitatory.v_peak: f64,
    "inh_a" => inhibitory.a: f64,
    "inh_b" => inhibitory.b: f64,
    "inh_c" => inhibitory.c: f64,
    "inh_d" => inhibitory.d: f64,
    "inh_v_peak" => inhibitory.v_peak: f64,
    "stdp_a_plus" => stdp.a_plus: f64,
    "stdp_a_minus" => stdp.a_minus: f64,
    "stdp_tau_plus" => stdp.tau_plus: f64,
    "stdp_tau_minus" => stdp.tau_minus: f64,
    "w_min" => stdp.w_min: f64,
    "w_max" => stdp.w_max: f64,
    "consolidation_ms" => stdp.consolidation_period: u32,
    "ltp_lookback_ms" => ltp_lookback_ms: u32,
    "w_exc" => weights.excitatory: f64,
    "w_inh" => weights.inhibitory: f64,
    "thalamic_events" => thalamic.events_per_ms_per_column: u32,
    "thalamic_amplitude" => thalamic.amplitude: f64,
    "rate_bin_ms" => rate_bin_ms: u32,
    "weight_bins" => weight_bins: u32,
    "weak_points" => weak_points: Vec<WeakPoint>,
    "m_list" => m_list: Vec<u32>,
    "msweep_total_synapses" => msweep_total_synapses: u64,
    "timeout_ms" => timeout_ms: u64,
}

impl ExperimentConfig {
    /// Applies a `key = value` document on top of `self`. Blank lines and
    /// `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), HarnessError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(HarnessError::config(format!("line {}", n + 1), format!("expected key = value, got {raw:?}")));
            };
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides as given on the command line.
    pub fn apply_overrides<'a>(&mut self, pairs: impl IntoIterator<Item = &'a str>) -> Result<(), HarnessError> {
        for p in pairs {
            let (k, v) = p.split_once('=').ok_or_else(|| HarnessError::config(p, "expected key=value"))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Fully resolved configuration as a document accepted by [`Self::from_text`].
    pub fn render(&self) -> String {
        let mut out = String::from("# resolved dpsnn configuration\n");
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            cfx: self.grid_x,
            cfy: self.grid_y,
            neurons_per_column: self.neurons_per_column,
            excitatory_fraction: self.excitatory_fraction,
            synapses_per_neuron: self.synapses_per_neuron,
            delay_min: self.delay_min,
            delay_max: self.delay_max,
            master_seed: self.seed,
        }
    }

    /// Engine configuration for the configured grid.
    pub fn sim_config(&self) -> Result<SimConfig, HarnessError> {
        self.sim_config_for(self.grid())
    }

    /// Engine configuration with every parameter taken from `self` except the grid.
    pub fn sim_config_for(&self, grid: GridSpec) -> Result<SimConfig, HarnessError> {
        let mut connectome = ConnectomeSpec::new(grid)?;
        connectome.weights = self.weights;
        let mut sim = SimConfig::new(connectome);
        sim.excitatory = self.excitatory;
        sim.inhibitory = self.inhibitory;
        sim.stdp = self.stdp;
        sim.plasticity = self.plasticity;
        sim.ltp_lookback_ms = self.ltp_lookback_ms;
        sim.thalamic = self.thalamic;
        sim.barrier = self.barrier;
        sim.rate_bin_ms = self.rate_bin_ms;
        sim.trace_gids = self.trace_gids.clone();
        sim.weight_bins = self.weight_bins;
        sim.validate()?;
        Ok(sim)
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}
