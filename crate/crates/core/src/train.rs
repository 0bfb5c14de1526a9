//! Stochastic training loop: sample detuning batches, average losses, run
//! Adam, and refine a qubit-trained network on the qutrit model.
//!
//! Model selection is deterministic: candidates are scored on a fixed
//! 101-point detuning grid spanning the training window, and the best-seen
//! parameters are returned. A fixed seed therefore reproduces the loss
//! series and the returned network bit-for-bit (batch members are evaluated
//! in parallel but reduced in batch order).

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{T_END, T_START};
use crate::grad::{batch_loss, batch_loss_and_gradient};
use crate::integrate::IntegratorConfig;
use crate::net::{NetField, NetworkParams, Scenario};
use crate::quantum::System;

/// Number of points in the fixed validation grid.
pub const VALIDATION_GRID_POINTS: usize = 101;
/// Window length of the converged-loss moving average.
const CONVERGENCE_WINDOW: usize = 200;
const CONVERGENCE_TOL: f64 = 1e-8;
const DIVERGENCE_LOSS: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Sampling window for the detuning, in units of `Ω_2π`.
    pub delta_low: f64,
    pub delta_high: f64,
    pub batch_size: usize,
    pub max_iters: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub system: System,
    /// Weight of the leakage penalty in the qutrit loss.
    pub leak_weight: f64,
    pub n_steps: usize,
    /// Validate (and snapshot the best-seen network) every this many
    /// iterations; the start and end are always validated.
    pub validate_every: usize,
    /// Consecutive stale validations tolerated before the learning rate is
    /// halved (see the plateau handling in [`train`]).
    pub plateau_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            delta_low: -0.8,
            delta_high: 1.1,
            batch_size: 128,
            max_iters: 10_000,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            system: System::Qubit,
            leak_weight: 1.0,
            n_steps: 512,
            validate_every: 100,
            plateau_patience: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_low < self.delta_high) {
            return Err(Error::InvalidParameter(format!(
                "detuning window is empty: [{}, {}]",
                self.delta_low, self.delta_high
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch_size must be at least 1".into()));
        }
        if self.validate_every == 0 {
            return Err(Error::InvalidParameter("validate_every must be at least 1".into()));
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("epsilon", self.epsilon),
            ("leak_weight", self.leak_weight),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        IntegratorConfig::new(self.n_steps)?;
        Ok(())
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig::new(self.n_steps).expect("validated")
    }

    /// The fixed validation grid spanning the training window.
    pub fn validation_grid(&self) -> Vec<f64> {
        let n = VALIDATION_GRID_POINTS;
        (0..n)
            .map(|k| self.delta_low + (self.delta_high - self.delta_low) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Spectral summary of the trained pulse, for spotting anomalously narrow
/// (high-bandwidth) solutions.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BandwidthReport {
    /// Power-weighted spectral centroid, in units of `Ω_2π`.
    pub centroid: f64,
    /// Power-weighted rms spectral width, in units of `Ω_2π`.
    pub rms_width: f64,
}

/// Validation-grid summary of the qutrit behavior.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QutritValidation {
    pub mean_qubit_block_loss: f64,
    pub mean_leakage: f64,
    pub max_leakage: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean batch loss at each iteration, evaluated at the incoming
    /// parameters.
    pub loss_series: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_clock_s: f64,
    /// `(iteration, validation loss)` at every validation point.
    pub validation_history: Vec<(usize, f64)>,
    pub best_validation_loss: f64,
    /// Iteration the returned parameters were snapshotted at.
    pub best_iteration: usize,
    /// `(iteration, new rate)` at every plateau-triggered halving.
    pub lr_history: Vec<(usize, f64)>,
    pub bandwidth: BandwidthReport,
    pub qutrit: Option<QutritValidation>,
}

/// Adam optimizer state over a flat parameter vector.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n_params: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn from_config(cfg: &TrainConfig, n_params: usize) -> Self {
        Self::new(n_params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    }

    /// One bias-corrected update in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.learning_rate * mhat / (vhat.sqrt() + self.epsilon);
        }
    }
}

/// Draw a batch of scenarios: `δ ~ U[delta_low, delta_high]`, `α = 0`,
/// `θ = π/2`.
pub fn sample_batch(cfg: &TrainConfig, rng: &mut ChaCha12Rng) -> Vec<Scenario> {
    let dist = Uniform::new_inclusive(cfg.delta_low, cfg.delta_high);
    (0..cfg.batch_size)
        .map(|_| Scenario::new(FRAC_PI_2, dist.sample(rng), 0.0))
        .collect()
}

/// One optimization step. Returns the updated parameters and the mean batch
/// loss evaluated at the incoming parameters.
pub fn train_step(
    params: &NetworkParams,
    batch: &[Scenario],
    opt: &mut Adam,
    cfg: &TrainConfig,
) -> Result<(NetworkParams, f64)> {
    let (loss, grad) = batch_loss_and_gradient(
        params,
        batch,
        &cfg.system,
        cfg.leak_weight,
        &cfg.integrator(),
    )?;
    let mut flat = params.to_vec();
    opt.step(&mut flat, &grad);
    let mut next = params.clone();
    next.set_from_vec(&flat);
    Ok((next, loss))
}

/// Mean loss over the fixed validation grid.
pub fn validation_loss(params: &NetworkParams, cfg: &TrainConfig) -> Result<f64> {
    let scenarios: Vec<Scenario> = cfg
        .validation_grid()
        .iter()
        .map(|&d| Scenario::new(FRAC_PI_2, d, 0.0))
        .collect();
    batch_loss(params, &scenarios, &cfg.system, cfg.leak_weight, &cfg.integrator())
}

/// Power-spectrum summary of the unperturbed pulse.
pub fn bandwidth_report(params: &NetworkParams) -> BandwidthReport {
    use rustfft::{num_complex::Complex, FftPlanner};
    const N: usize = 1024;
    let field = NetField::new(params, FRAC_PI_2);
    let mut buf: Vec<Complex<f64>> = (0..N)
        .map(|k| {
            let t = T_START + (T_END - T_START) * k as f64 / N as f64;
            use crate::field::ControlField;
            let v = field.value(t);
            Complex::new(v.re, v.im)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(N).process(&mut buf);
    // bin k corresponds to detuning k (signed) in units of Ω_2π
    let mut total = 0.0;
    let mut mean = 0.0;
    for (k, v) in buf.iter().enumerate() {
        let f = if k <= N / 2 { k as f64 } else { k as f64 - N as f64 };
        let p = v.norm_sqr();
        total += p;
        mean += p * f;
    }
    if total == 0.0 {
        return BandwidthReport { centroid: 0.0, rms_width: 0.0 };
    }
    mean /= total;
    let mut var = 0.0;
    for (k, v) in buf.iter().enumerate() {
        let f = if k <= N / 2 { k as f64 } else { k as f64 - N as f64 };
        var += v.norm_sqr() * (f - mean) * (f - mean);
    }
    BandwidthReport { centroid: mean, rms_width: (var / total).sqrt() }
}

fn qutrit_validation(params: &NetworkParams, cfg: &TrainConfig) -> Result<Option<QutritValidation>> {
    let System::Qutrit(model) = cfg.system else {
        return Ok(None);
    };
    let integrator = cfg.integrator();
    let grid = cfg.validation_grid();
    let mut block_loss = 0.0;
    let mut mean_leak = 0.0;
    let mut max_leak = 0.0f64;
    for &d in &grid {
        let field = crate::field::Perturbed::detuned(NetField::new(params, FRAC_PI_2), d);
        let traj = crate::integrate::propagate_qutrit(&field, &model, &integrator)?;
        let u = traj.final_state();
        let c = crate::quantum::qubit_block_cvec(&u).normalized();
        block_loss += crate::quantum::qubit_loss(&c);
        let leak = u.leakage();
        mean_leak += leak;
        max_leak = max_leak.max(leak);
    }
    let n = grid.len() as f64;
    Ok(Some(QutritValidation {
        mean_qubit_block_loss: block_loss / n,
        mean_leakage: mean_leak / n,
        max_leakage: max_leak,
    }))
}

/// Run the training loop from `init`, returning the best-seen parameters by
/// validation loss and a report.
///
/// Stops at `max_iters`, or earlier once the 200-iteration moving average of
/// the batch loss changes by less than 1e-8 between consecutive windows.
/// A mean batch loss above 1e3 aborts with [`Error::Diverged`].
pub fn train(cfg: &TrainConfig, init: &NetworkParams) -> Result<(NetworkParams, TrainReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut params = init.clone();
    let mut opt = Adam::from_config(cfg, crate::net::N_PARAMS);

    let mut report = TrainReport {
        loss_series: Vec::with_capacity(cfg.max_iters),
        iterations: 0,
        converged: false,
        wall_clock_s: 0.0,
        validation_history: Vec::new(),
        lr_history: Vec::new(),
        best_validation_loss: f64::INFINITY,
        best_iteration: 0,
        bandwidth: BandwidthReport { centroid: 0.0, rms_width: 0.0 },
        qutrit: None,
    };

    let mut best = params.clone();
    // validation checkpoints without a >= 0.5% improvement on the best
    let mut stale_validations = 0usize;
    let validate = |p: &NetworkParams,
                    iter: usize,
                    report: &mut TrainReport,
                    best: &mut NetworkParams,
                    stale: &mut usize|
     -> Result<()> {
        let v = validation_loss(p, cfg)?;
        report.validation_history.push((iter, v));
        if v < 0.995 * report.best_validation_loss {
            *stale = 0;
        } else {
            *stale += 1;
        }
        if v < report.best_validation_loss {
            report.best_validation_loss = v;
            report.best_iteration = iter;
            *best = p.clone();
        }
        Ok(())
    };
    validate(&params, 0, &mut report, &mut best, &mut stale_validations)?;

    let lr_floor = cfg.learning_rate / 1024.0;
    for iter in 0..cfg.max_iters {
        let batch = sample_batch(cfg, &mut rng);
        let (next, loss) = train_step(&params, &batch, &mut opt, cfg).map_err(|e| match e {
            Error::NonFiniteGradient { .. } => Error::NonFiniteGradient { iter },
            Error::NonFiniteLoss { .. } => Error::NonFiniteLoss { iter },
            other => other,
        })?;
        params = next;
        report.loss_series.push(loss);
        report.iterations = iter + 1;

        if loss > DIVERGENCE_LOSS {
            report.wall_clock_s = start.elapsed().as_secs_f64();
            report.bandwidth = bandwidth_report(&params);
            return Err(Error::Diverged { iter, loss, report: Box::new(report) });
        }

        if (iter + 1) % cfg.validate_every == 0 {
            validate(&params, iter + 1, &mut report, &mut best, &mut stale_validations)?;
            // constant-rate Adam stalls on its gradient-noise floor well
            // above the validation target; halve the rate when three
            // consecutive validations brought no real improvement
            if stale_validations >= cfg.plateau_patience {
                stale_validations = 0;
                if opt.learning_rate > lr_floor {
                    opt.learning_rate *= 0.5;
                    report.lr_history.push((iter + 1, opt.learning_rate));
                } else {
                    // stalled at the rate floor
                    report.converged = true;
                    break;
                }
            }
        }

        // compare disjoint 200-iteration blocks at block boundaries; a
        // sliding every-iteration comparison would fire spuriously whenever
        // the difference of the two window means crosses zero
        let n = report.loss_series.len();
        if n >= 2 * CONVERGENCE_WINDOW && n % CONVERGENCE_WINDOW == 0 {
            let recent: f64 =
                report.loss_series[n - CONVERGENCE_WINDOW..].iter().sum::<f64>() / CONVERGENCE_WINDOW as f64;
            let previous: f64 = report.loss_series[n - 2 * CONVERGENCE_WINDOW..n - CONVERGENCE_WINDOW]
                .iter()
                .sum::<f64>()
                / CONVERGENCE_WINDOW as f64;
            if (recent - previous).abs() < CONVERGENCE_TOL {
                report.converged = true;
                break;
            }
        }
    }

    if report.iterations % cfg.validate_every != 0 || report.converged {
        validate(&params, report.iterations, &mut report, &mut best, &mut stale_validations)?;
    }
    report.wall_clock_s = start.elapsed().as_secs_f64();
    report.bandwidth = bandwidth_report(&best);
    report.qutrit = qutrit_validation(&best, cfg)?;
    Ok((best, report))
}

/// Resume training a qubit-trained network on the qutrit model.
///
/// Identical to [`train`] with a qutrit system, and the report additionally
/// carries the qubit-block loss and leakage over the validation grid.
pub fn refine(cfg: &TrainConfig, params_from_qubit: &NetworkParams) -> Result<(NetworkParams, TrainReport)> {
    if !matches!(cfg.system, System::Qutrit(_)) {
        return Err(Error::InvalidParameter(
            "refine requires a qutrit system in the training config".into(),
        ));
    }
    train(cfg, params_from_qubit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::init_params;

    #[test]
    fn sampled_deltas_stay_in_window_and_are_reproducible() {
        let cfg = TrainConfig { batch_size: 1000, ..TrainConfig::default() };
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let batch = sample_batch(&cfg, &mut rng);
        assert_eq!(batch.len(), 1000);
        for s in &batch {
            assert!(s.delta >= -0.8 && s.delta <= 1.1);
            assert_eq!(s.alpha, 0.0);
            assert_eq!(s.theta, FRAC_PI_2);
        }
        let mut rng2 = ChaCha12Rng::seed_from_u64(5);
        assert_eq!(batch, sample_batch(&cfg, &mut rng2));
    }

    #[test]
    fn sampled_delta_mean_matches_uniform() {
        let cfg = TrainConfig { batch_size: 100_000, ..TrainConfig::default() };
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let batch = sample_batch(&cfg, &mut rng);
        let mean: f64 = batch.iter().map(|s| s.delta).sum::<f64>() / batch.len() as f64;
        assert!((mean - 0.15).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn adam_zero_gradient_leaves_params() {
        let mut opt = Adam::new(3, 1e-3, 0.9, 0.999, 1e-8);
        let mut p = vec![0.4, -0.2, 1.0];
        let orig = p.clone();
        opt.step(&mut p, &[0.0, 0.0, 0.0]);
        assert_eq!(p, orig);
    }

    #[test]
    fn adam_first_step_has_unit_scale() {
        // on a quadratic objective the first bias-corrected step is
        // learning_rate * sign(gradient), up to epsilon
        let mut opt = Adam::new(1, 1e-3, 0.9, 0.999, 1e-8);
        let mut p = vec![2.0];
        let grad = 2.0 * p[0]; // d/dp p²
        opt.step(&mut p, &[grad]);
        let moved = 2.0 - p[0];
        assert!((moved - 1e-3).abs() < 1e-9, "moved {moved}");
    }

    #[test]
    fn adam_converges_on_quadratic() {
        let mut opt = Adam::new(1, 0.05, 0.9, 0.999, 1e-8);
        let mut p = vec![3.0];
        for _ in 0..2000 {
            let g = 2.0 * (p[0] - 0.7);
            opt.step(&mut p, &[g]);
        }
        assert!((p[0] - 0.7).abs() < 1e-4, "p = {}", p[0]);
    }

    #[test]
    fn max_iters_zero_returns_init() {
        let cfg = TrainConfig { max_iters: 0, n_steps: 64, ..TrainConfig::default() };
        let init = init_params(3);
        let (out, report) = train(&cfg, &init).unwrap();
        assert_eq!(out, init);
        assert_eq!(report.iterations, 0);
        assert!(!report.converged);
    }

    #[test]
    fn training_reduces_validation_loss() {
        // short smoke run; the full-budget runs live in the acceptance suite
        let cfg = TrainConfig {
            max_iters: 60,
            batch_size: 16,
            n_steps: 64,
            validate_every: 20,
            seed: 1,
            ..TrainConfig::default()
        };
        let init = init_params(42);
        let (best, report) = train(&cfg, &init).unwrap();
        let v0 = report.validation_history[0].1;
        assert!(report.best_validation_loss < v0, "no improvement: {report:?}");
        let vbest = validation_loss(&best, &cfg).unwrap();
        assert!((vbest - report.best_validation_loss).abs() < 1e-12);
    }

    #[test]
    fn best_seen_is_monotone_against_history() {
        let cfg = TrainConfig {
            max_iters: 50,
            batch_size: 8,
            n_steps: 64,
            validate_every: 10,
            seed: 9,
            ..TrainConfig::default()
        };
        let (_, report) = train(&cfg, &init_params(7)).unwrap();
        let min_hist = report
            .validation_history
            .iter()
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(min_hist, report.best_validation_loss);
    }

    #[test]
    fn fixed_seed_reproduces_loss_series() {
        let cfg = TrainConfig {
            max_iters: 25,
            batch_size: 8,
            n_steps: 64,
            validate_every: 10,
            seed: 21,
            ..TrainConfig::default()
        };
        let (_, r1) = train(&cfg, &init_params(1)).unwrap();
        let (_, r2) = train(&cfg, &init_params(1)).unwrap();
        assert_eq!(r1.loss_series, r2.loss_series);
    }

    #[test]
    fn refine_requires_qutrit_system() {
        let cfg = TrainConfig { ..TrainConfig::default() };
        assert!(refine(&cfg, &init_params(1)).is_err());
    }

    #[test]
    fn config_rejects_empty_window() {
        let cfg = TrainConfig { delta_low: 1.1, delta_high: 1.1, ..TrainConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn batch_mean_is_unbiased_estimator() {
        // Monte-Carlo mean over the window vs a dense-grid integral of the
        // per-scenario loss, on frozen parameters; agreement within 3σ.
        let cfg = TrainConfig { n_steps: 64, batch_size: 4000, seed: 77, ..TrainConfig::default() };
        let params = init_params(4);
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        let batch = sample_batch(&cfg, &mut rng);
        let integrator = cfg.integrator();

        let losses: Vec<f64> = batch
            .iter()
            .map(|s| {
                crate::grad::scenario_loss(&params, s, &cfg.system, cfg.leak_weight, &integrator)
                    .unwrap()
            })
            .collect();
        let mc_mean: f64 = losses.iter().sum::<f64>() / losses.len() as f64;
        let mc_var: f64 = losses.iter().map(|l| (l - mc_mean).powi(2)).sum::<f64>()
            / (losses.len() as f64 - 1.0);
        let sigma = (mc_var / losses.len() as f64).sqrt();

        // 2001-point trapezoidal integral as the reference
        let n = 2001;
        let mut integral = 0.0;
        for k in 0..n {
            let d = cfg.delta_low + (cfg.delta_high - cfg.delta_low) * k as f64 / (n - 1) as f64;
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            let s = Scenario::new(FRAC_PI_2, d, 0.0);
            integral += w * crate::grad::scenario_loss(&params, &s, &cfg.system, cfg.leak_weight, &integrator).unwrap();
        }
        integral /= (n - 1) as f64;

        assert!(
            (mc_mean - integral).abs() < 3.0 * sigma,
            "MC mean {mc_mean} vs integral {integral} (sigma {sigma})"
        );
    }
}
