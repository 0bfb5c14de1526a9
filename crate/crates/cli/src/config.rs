//! Strict-schema JSON configs, one per command. Unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use pulse_core::baselines::{CompositeSequence, GaConfig, Window};
use pulse_core::quantum::{QutritModel, System};
use pulse_core::train::TrainConfig;

use crate::{CliError, CliResult};

pub fn parse<T: serde::de::DeserializeOwned>(raw: &str) -> CliResult<T> {
    serde_json::from_str(raw).map_err(|e| CliError::Config(e.to_string()))
}

/// SHA-256 of the effective (post-override) config serialization.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    use sha2::{Digest, Sha256};
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Qubit,
    Qutrit {
        lambda: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        anharmonicity_hz: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration_s: Option<f64>,
    },
}

impl SystemSpec {
    pub fn resolve(&self) -> CliResult<System> {
        match self {
            SystemSpec::Qubit => Ok(System::Qubit),
            SystemSpec::Qutrit { lambda, delta, anharmonicity_hz, duration_s } => {
                let model = match (delta, anharmonicity_hz, duration_s) {
                    (Some(d), None, None) => QutritModel::new(*d, *lambda),
                    (None, Some(a), Some(t)) => QutritModel::from_physical(*a, *t, *lambda),
                    _ => {
                        return Err(CliError::Config(
                            "qutrit system needs either `delta` or both `anharmonicity_hz` and `duration_s`"
                                .into(),
                        ))
                    }
                };
                Ok(System::Qutrit(model.map_err(CliError::from_core)?))
            }
        }
    }
}

/// Mirror of [`TrainConfig`] without the system tag; every field optional.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub delta_low: Option<f64>,
    pub delta_high: Option<f64>,
    pub batch_size: Option<usize>,
    pub max_iters: Option<usize>,
    pub learning_rate: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub leak_weight: Option<f64>,
    pub n_steps: Option<usize>,
    pub validate_every: Option<usize>,
    pub plateau_patience: Option<usize>,
}

impl TrainSettings {
    pub fn apply(&self, system: System) -> TrainConfig {
        let mut cfg = TrainConfig { system, ..TrainConfig::default() };
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        take!(
            delta_low,
            delta_high,
            batch_size,
            max_iters,
            learning_rate,
            beta1,
            beta2,
            epsilon,
            seed,
            leak_weight,
            n_steps,
            validate_every,
            plateau_patience
        );
        cfg
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCmdConfig {
    pub system: SystemSpec,
    #[serde(default)]
    pub train: TrainSettings,
    /// Seed for the weight initialization (`train.seed` drives batching).
    #[serde(default = "default_init_seed")]
    pub init_seed: u64,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    /// Starting checkpoint; required by `refine`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_checkpoint: Option<PathBuf>,
    /// Sample count of the emitted pulse table.
    #[serde(default = "default_pulse_points")]
    pub pulse_csv_points: usize,
}

fn default_init_seed() -> u64 {
    42
}
fn default_omega_max() -> f64 {
    3.0
}
fn default_pulse_points() -> usize {
    512
}

/// How a pulse under test is specified.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseSpec {
    Checkpoint {
        path: PathBuf,
    },
    Rect {
        theta: f64,
    },
    Drag {
        theta: f64,
        /// Fixed coefficient; omit to calibrate on the qutrit model.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coeff: Option<f64>,
    },
    Composite {
        segments: Vec<pulse_core::baselines::Segment>,
    },
    /// Composite sequence produced on the fly by the GA + refinement search.
    OptimizedComposite {
        n_pulses: usize,
        #[serde(default)]
        ga: GaSettings,
        #[serde(default)]
        window: Option<WindowSpec>,
    },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaSettings {
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub mutation_scale: Option<f64>,
    pub elite: Option<usize>,
    pub seed: Option<u64>,
    pub refine_iters: Option<usize>,
    pub refine_rate: Option<f64>,
    pub n_steps: Option<usize>,
}

impl GaSettings {
    pub fn apply(&self, seeds: Vec<CompositeSequence>) -> GaConfig {
        let mut cfg = GaConfig { seed_sequences: seeds, ..GaConfig::default() };
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        take!(population, generations, mutation_scale, elite, seed, refine_iters, refine_rate, n_steps);
        cfg
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub delta_low: f64,
    pub delta_high: f64,
    #[serde(default = "default_window_grid")]
    pub n_grid: usize,
}

fn default_window_grid() -> usize {
    39
}

impl From<WindowSpec> for Window {
    fn from(w: WindowSpec) -> Window {
        Window { delta_low: w.delta_low, delta_high: w.delta_high, n_grid: w.n_grid }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn points(&self) -> CliResult<Vec<f64>> {
        if !(self.start < self.stop) || self.n < 2 {
            return Err(CliError::Config(format!(
                "grid needs start < stop and n >= 2, got [{}, {}] with n = {}",
                self.start, self.stop, self.n
            )));
        }
        Ok((0..self.n)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / (self.n - 1) as f64)
            .collect())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCmdConfig {
    pub pulse: PulseSpec,
    pub system: SystemSpec,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default)]
    pub t_dead_s: f64,
    #[serde(default)]
    pub emulate_if_hop: bool,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
}

pub fn default_n_steps() -> usize {
    512
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparePulse {
    pub name: String,
    pub pulse: PulseSpec,
    /// Physical duration; enables the MHz axis in the report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareCmdConfig {
    pub pulses: Vec<ComparePulse>,
    pub system: SystemSpec,
    pub grid: GridSpec,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
}

fn default_threshold() -> f64 {
    0.99
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportCmdConfig {
    pub checkpoint: PathBuf,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyCmdConfig {
    pub waveform_csv: PathBuf,
    pub checkpoint: PathBuf,
    pub f_center_hz: f64,
    pub duration_s: f64,
    /// Trace amplitude per `Ω_2π` unit; omit to least-squares calibrate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volts_per_unit: Option<f64>,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayCmdConfig {
    pub pulse: PulseSpec,
    pub t1_s: f64,
    pub t2_s: f64,
    pub duration_s: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    /// Needed to calibrate a DRAG pulse spec.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
}

fn default_n_max() -> usize {
    50
}
