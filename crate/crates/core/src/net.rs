//! The trainable control field: a depth-3, width-20 tanh network mapping
//! `(t, θ)` to an amplitude channel and a phase channel, plus the
//! perturbation wrapper producing the complex drive.
//!
//! The first output is squashed through `tanh` and scaled by the amplitude
//! cap, so `|A(t)| < Ω_max` strictly; the second output is used as the raw
//! phase (wrapping would break differentiability).

use std::path::Path;

use num_complex::Complex64 as C64;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ControlField;

/// Hidden-layer width.
pub const WIDTH: usize = 20;
/// Number of hidden layers.
pub const DEPTH: usize = 3;
/// Total number of trainable parameters.
pub const N_PARAMS: usize =
    WIDTH * 2 + WIDTH + 2 * (WIDTH * WIDTH + WIDTH) + 2 * WIDTH + 2;

/// Default amplitude cap, in units of `Ω_2π`.
pub const DEFAULT_OMEGA_MAX: f64 = 3.0;

const CHECKPOINT_VERSION: u32 = 1;

/// One detuning/amplitude perturbation scenario at a target rotation angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Target rotation angle (rad).
    pub theta: f64,
    /// Detuning in units of `Ω_2π`.
    pub delta: f64,
    /// Relative amplitude perturbation.
    pub alpha: f64,
}

impl Scenario {
    pub fn new(theta: f64, delta: f64, alpha: f64) -> Self {
        Self { theta, delta, alpha }
    }

    /// On-resonance, unperturbed scenario.
    pub fn resonant(theta: f64) -> Self {
        Self::new(theta, 0.0, 0.0)
    }
}

/// Weights and biases of the `2 -> 20 -> 20 -> 20 -> 2` network, plus the
/// amplitude cap and the seed the weights were drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub w1: [[f64; 2]; WIDTH],
    pub b1: [f64; WIDTH],
    pub w2: [[f64; WIDTH]; WIDTH],
    pub b2: [f64; WIDTH],
    pub w3: [[f64; WIDTH]; WIDTH],
    pub b3: [f64; WIDTH],
    pub w4: [[f64; WIDTH]; 2],
    pub b4: [f64; 2],
    pub omega_max: f64,
    pub seed: u64,
}

/// Glorot-style uniform initialization, deterministic in the seed.
pub fn init_params(seed: u64) -> NetworkParams {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let draw = |fan_in: usize, fan_out: usize| {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        move |rng: &mut ChaCha12Rng| dist.sample(rng)
    };

    let mut p = NetworkParams {
        w1: [[0.0; 2]; WIDTH],
        b1: [0.0; WIDTH],
        w2: [[0.0; WIDTH]; WIDTH],
        b2: [0.0; WIDTH],
        w3: [[0.0; WIDTH]; WIDTH],
        b3: [0.0; WIDTH],
        w4: [[0.0; WIDTH]; 2],
        b4: [0.0; 2],
        omega_max: DEFAULT_OMEGA_MAX,
        seed,
    };
    let d = draw(2, WIDTH);
    for row in p.w1.iter_mut() {
        for v in row.iter_mut() {
            *v = d(&mut rng);
        }
    }
    let d = draw(WIDTH, WIDTH);
    for row in p.w2.iter_mut() {
        for v in row.iter_mut() {
            *v = d(&mut rng);
        }
    }
    for row in p.w3.iter_mut() {
        for v in row.iter_mut() {
            *v = d(&mut rng);
        }
    }
    let d = draw(WIDTH, 2);
    for row in p.w4.iter_mut() {
        for v in row.iter_mut() {
            *v = d(&mut rng);
        }
    }
    p
}

impl NetworkParams {
    /// All-zero parameters (emits the zero field).
    pub fn zeros() -> Self {
        NetworkParams {
            w1: [[0.0; 2]; WIDTH],
            b1: [0.0; WIDTH],
            w2: [[0.0; WIDTH]; WIDTH],
            b2: [0.0; WIDTH],
            w3: [[0.0; WIDTH]; WIDTH],
            b3: [0.0; WIDTH],
            w4: [[0.0; WIDTH]; 2],
            b4: [0.0; 2],
            omega_max: DEFAULT_OMEGA_MAX,
            seed: 0,
        }
    }

    /// Raw network outputs `(o1, o2)` at `(t, θ)`.
    pub fn forward(&self, t: f64, theta: f64) -> (f64, f64) {
        let mut a1 = [0.0; WIDTH];
        for i in 0..WIDTH {
            a1[i] = (self.w1[i][0] * t + self.w1[i][1] * theta + self.b1[i]).tanh();
        }
        let mut a2 = [0.0; WIDTH];
        for i in 0..WIDTH {
            let mut z = self.b2[i];
            for j in 0..WIDTH {
                z += self.w2[i][j] * a1[j];
            }
            a2[i] = z.tanh();
        }
        let mut a3 = [0.0; WIDTH];
        for i in 0..WIDTH {
            let mut z = self.b3[i];
            for j in 0..WIDTH {
                z += self.w3[i][j] * a2[j];
            }
            a3[i] = z.tanh();
        }
        let mut o = [0.0; 2];
        for (i, oi) in o.iter_mut().enumerate() {
            let mut z = self.b4[i];
            for j in 0..WIDTH {
                z += self.w4[i][j] * a3[j];
            }
            *oi = z;
        }
        (o[0], o[1])
    }

    /// Signed amplitude and phase of the unperturbed field at `(t, θ)`.
    pub fn amplitude_phase(&self, t: f64, theta: f64) -> (f64, f64) {
        let (o1, o2) = self.forward(t, theta);
        (self.omega_max * o1.tanh(), o2)
    }

    /// Flatten the trainable parameters in canonical order
    /// (`w1`, `b1`, `w2`, `b2`, `w3`, `b3`, `w4`, `b4`, row-major).
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(N_PARAMS);
        v.extend(self.w1.iter().flatten());
        v.extend(self.b1.iter());
        v.extend(self.w2.iter().flatten());
        v.extend(self.b2.iter());
        v.extend(self.w3.iter().flatten());
        v.extend(self.b3.iter());
        v.extend(self.w4.iter().flatten());
        v.extend(self.b4.iter());
        v
    }

    /// Inverse of [`NetworkParams::to_vec`]; `omega_max` and `seed` are kept.
    pub fn set_from_vec(&mut self, v: &[f64]) {
        assert_eq!(v.len(), N_PARAMS, "parameter vector has wrong length");
        let mut it = v.iter().copied();
        let mut next = || it.next().expect("length checked above");
        for row in self.w1.iter_mut() {
            for x in row.iter_mut() {
                *x = next();
            }
        }
        for x in self.b1.iter_mut() {
            *x = next();
        }
        for row in self.w2.iter_mut() {
            for x in row.iter_mut() {
                *x = next();
            }
        }
        for x in self.b2.iter_mut() {
            *x = next();
        }
        for row in self.w3.iter_mut() {
            for x in row.iter_mut() {
                *x = next();
            }
        }
        for x in self.b3.iter_mut() {
            *x = next();
        }
        for row in self.w4.iter_mut() {
            for x in row.iter_mut() {
                *x = next();
            }
        }
        for x in self.b4.iter_mut() {
            *x = next();
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite()) && self.omega_max.is_finite()
    }
}

/// Perturbed complex drive at time `t`:
/// `(1 + α) Ω_max tanh(o1) e^{i(o2 + δt)}`.
pub fn field_at(params: &NetworkParams, t: f64, scenario: &Scenario) -> C64 {
    let (a, phi) = params.amplitude_phase(t, scenario.theta);
    (1.0 + scenario.alpha) * a * C64::from_polar(1.0, phi + scenario.delta * t)
}

/// Unperturbed network field at a fixed target angle.
pub struct NetField<'a> {
    pub params: &'a NetworkParams,
    pub theta: f64,
}

impl<'a> NetField<'a> {
    pub fn new(params: &'a NetworkParams, theta: f64) -> Self {
        Self { params, theta }
    }
}

impl ControlField for NetField<'_> {
    fn value(&self, t: f64) -> C64 {
        let (a, phi) = self.params.amplitude_phase(t, self.theta);
        a * C64::from_polar(1.0, phi)
    }
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointJson {
    version: u32,
    seed: u64,
    omega_max: f64,
    layers: Vec<LayerJson>,
}

const LAYER_SHAPES: [(usize, usize); 4] = [(WIDTH, 2), (WIDTH, WIDTH), (WIDTH, WIDTH), (2, WIDTH)];

/// Serialize parameters to the JSON checkpoint format. Round trips are
/// bit-exact.
pub fn save_checkpoint(params: &NetworkParams, path: &Path) -> Result<()> {
    let mut layers = Vec::with_capacity(4);
    let flat = params.to_vec();
    let mut off = 0;
    for (rows, cols) in LAYER_SHAPES {
        let weights = flat[off..off + rows * cols].to_vec();
        off += rows * cols;
        let bias = flat[off..off + rows].to_vec();
        off += rows;
        layers.push(LayerJson { rows, cols, weights, bias });
    }
    let file = CheckpointJson {
        version: CHECKPOINT_VERSION,
        seed: params.seed,
        omega_max: params.omega_max,
        layers,
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<NetworkParams> {
    let text = std::fs::read_to_string(path)?;
    let file: CheckpointJson = serde_json::from_str(&text)?;
    if file.version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion {
            found: file.version,
            expected: CHECKPOINT_VERSION,
        });
    }
    if file.layers.len() != LAYER_SHAPES.len() {
        return Err(Error::CheckpointFormat(format!(
            "expected {} layers, found {}",
            LAYER_SHAPES.len(),
            file.layers.len()
        )));
    }
    let mut flat = Vec::with_capacity(N_PARAMS);
    for (k, (layer, (rows, cols))) in file.layers.iter().zip(LAYER_SHAPES).enumerate() {
        if layer.rows != rows || layer.cols != cols {
            return Err(Error::CheckpointShape {
                layer: k,
                found_rows: layer.rows,
                found_cols: layer.cols,
                rows,
                cols,
            });
        }
        if layer.weights.len() != rows * cols || layer.bias.len() != rows {
            return Err(Error::CheckpointFormat(format!(
                "layer {k} has {} weights and {} biases, expected {} and {}",
                layer.weights.len(),
                layer.bias.len(),
                rows * cols,
                rows
            )));
        }
        flat.extend_from_slice(&layer.weights);
        flat.extend_from_slice(&layer.bias);
    }
    if !file.omega_max.is_finite() || flat.iter().any(|v| !v.is_finite()) {
        return Err(Error::CheckpointFormat("non-finite parameter value".into()));
    }
    let mut params = NetworkParams::zeros();
    params.set_from_vec(&flat);
    params.omega_max = file.omega_max;
    params.seed = file.seed;
    Ok(params)
}
