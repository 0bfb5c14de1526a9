//! Reference pulses for comparison: rectangular, DRAG, and composite
//! sequences of phased rectangular segments optimized with a genetic
//! algorithm plus gradient refinement.
//!
//! All baselines share the network pulse's amplitude cap (`|field| <= 3`)
//! and its loss: the window-averaged `π/2` infidelity over a detuning grid.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ControlField, Perturbed, T_END, T_START};
use crate::integrate::{propagate_qubit, IntegratorConfig};
use crate::quantum::qubit_loss;

/// Shared amplitude cap for fair comparison with the network pulse.
pub const AMPLITUDE_CAP: f64 = 3.0;

/// Constant real drive of the given area.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectPulse {
    pub amplitude: f64,
}

impl ControlField for RectPulse {
    fn value(&self, _t: f64) -> C64 {
        C64::new(self.amplitude, 0.0)
    }
}

/// Rectangular pulse of rotation area `θ` over the full window.
pub fn rectangular_pulse(theta: f64) -> Result<RectPulse> {
    if !(theta > 0.0 && theta < 2.0 * PI) {
        return Err(Error::InvalidParameter(format!(
            "rectangular pulse area must lie in (0, 2π), got {theta}"
        )));
    }
    Ok(RectPulse { amplitude: theta / (2.0 * PI) })
}

/// Cosine-envelope pulse with a derivative out-of-phase component:
/// `I(t) = A (1 - cos(t + π))/2` normalized to area `θ`, and
/// `Q(t) = coeff * I'(t) / Δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DragPulse {
    pub peak: f64,
    pub drag_coeff: f64,
    pub delta: f64,
}

impl ControlField for DragPulse {
    fn value(&self, t: f64) -> C64 {
        let i = 0.5 * self.peak * (1.0 - (t + PI).cos());
        let q = self.drag_coeff * 0.5 * self.peak * (t + PI).sin() / self.delta;
        C64::new(i, q)
    }
}

/// DRAG pulse of area `θ` on a second level detuned by `Δ != 0`.
pub fn drag_pulse(theta: f64, delta: f64, drag_coeff: f64) -> Result<DragPulse> {
    if !(theta > 0.0 && theta < 2.0 * PI) {
        return Err(Error::InvalidParameter(format!(
            "DRAG pulse area must lie in (0, 2π), got {theta}"
        )));
    }
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::InvalidParameter(
            "DRAG pulse needs a nonzero, finite second-level detuning".into(),
        ));
    }
    Ok(DragPulse { peak: theta / PI, drag_coeff, delta })
}

/// Calibrate the DRAG coefficient by minimizing the on-resonance qutrit loss
/// (golden-section search seeded by a coarse scan), mirroring how the
/// coefficient is tuned experimentally.
pub fn calibrate_drag(
    theta: f64,
    model: &crate::quantum::QutritModel,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let objective = |coeff: f64| -> Result<f64> {
        let pulse = drag_pulse(theta, model.delta, coeff)?;
        let traj = crate::integrate::propagate_qutrit(&pulse, model, cfg)?;
        Ok(crate::quantum::qutrit_loss(&traj.final_state(), 1.0))
    };
    let mut best = (0.0, objective(0.0)?);
    for k in 0..41 {
        let c = -5.0 + 10.0 * k as f64 / 40.0;
        let l = objective(c)?;
        if l < best.1 {
            best = (c, l);
        }
    }
    let (mut lo, mut hi) = (best.0 - 0.25, best.0 + 0.25);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = objective(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = objective(x2)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One constant-amplitude, constant-phase segment of a composite sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Fraction of the total duration, in (0, 1].
    pub f: f64,
    /// Real amplitude in units of `Ω_2π` (`|a| <= 3`).
    pub a: f64,
    /// Drive phase in radians.
    pub phi: f64,
}

/// A sequence of phased rectangular segments spanning the full window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeSequence {
    pub segments: Vec<Segment>,
}

impl CompositeSequence {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidParameter("composite sequence has no segments".into()));
        }
        let total: f64 = segments.iter().map(|s| s.f).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "segment duration fractions sum to {total}, expected 1"
            )));
        }
        if segments.iter().any(|s| s.f <= 0.0 || !s.a.is_finite() || !s.phi.is_finite()) {
            return Err(Error::InvalidParameter("invalid composite segment".into()));
        }
        Ok(Self { segments })
    }

    /// Split the longest segment in two equal halves; the emitted field is
    /// unchanged. Used to seed longer sequences with shorter optima.
    pub fn split_longest(&self) -> Self {
        let mut segments = self.segments.clone();
        let k = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.f.total_cmp(&b.1.f))
            .map(|(k, _)| k)
            .unwrap_or(0);
        let mut half = segments[k];
        half.f *= 0.5;
        segments[k] = half;
        segments.insert(k + 1, half);
        Self { segments }
    }
}

/// Piecewise-constant field realizing a composite sequence.
#[derive(Clone, Debug)]
pub struct CompositeField {
    values: Vec<C64>,
    /// Segment boundaries, length `segments + 1`, from `-π` to `π`.
    edges: Vec<f64>,
}

pub fn composite_field(seq: &CompositeSequence) -> CompositeField {
    let mut edges = Vec::with_capacity(seq.segments.len() + 1);
    let mut acc = 0.0;
    edges.push(T_START);
    for s in &seq.segments {
        acc += s.f;
        edges.push(T_START + (T_END - T_START) * acc);
    }
    *edges.last_mut().expect("nonempty") = T_END;
    let values = seq
        .segments
        .iter()
        .map(|s| C64::from_polar(s.a.abs(), if s.a < 0.0 { s.phi + PI } else { s.phi }))
        .collect();
    CompositeField { values, edges }
}

impl ControlField for CompositeField {
    fn value(&self, t: f64) -> C64 {
        // segments own their left edge; the final segment owns t = π
        let k = match self.edges[1..self.edges.len() - 1]
            .binary_search_by(|e| e.total_cmp(&t))
        {
            Ok(k) => k + 1,
            Err(k) => k,
        };
        self.values[k.min(self.values.len() - 1)]
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.edges[1..self.edges.len() - 1].to_vec()
    }
}

/// Detuning window and grid over which composite sequences are scored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub delta_low: f64,
    pub delta_high: f64,
    pub n_grid: usize,
}

impl Default for Window {
    fn default() -> Self {
        Self { delta_low: -0.8, delta_high: 1.1, n_grid: 39 }
    }
}

impl Window {
    pub fn grid(&self) -> Vec<f64> {
        (0..self.n_grid)
            .map(|k| {
                self.delta_low
                    + (self.delta_high - self.delta_low) * k as f64 / (self.n_grid - 1) as f64
            })
            .collect()
    }
}

/// Window-averaged `π/2` infidelity of an arbitrary field — the same loss
/// the network is trained on.
pub fn window_loss<F: ControlField>(field: &F, window: &Window, cfg: &IntegratorConfig) -> Result<f64> {
    let grid = window.grid();
    let losses: Vec<Result<f64>> = grid
        .par_iter()
        .map(|&d| {
            let traj = propagate_qubit(&Perturbed::detuned(field, d), cfg)?;
            Ok(qubit_loss(&traj.final_state().normalized()))
        })
        .collect();
    let mut total = 0.0;
    for l in losses {
        total += l?;
    }
    Ok(total / grid.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub mutation_scale: f64,
    pub elite: usize,
    pub seed: u64,
    /// Gradient-refinement iterations on the GA winner.
    pub refine_iters: usize,
    pub refine_rate: f64,
    /// Candidate sequences injected into the initial population (padded by
    /// segment splitting as needed).
    pub seed_sequences: Vec<CompositeSequence>,
    pub n_steps: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 48,
            generations: 120,
            mutation_scale: 0.25,
            elite: 2,
            seed: 0,
            refine_iters: 400,
            refine_rate: 0.02,
            seed_sequences: Vec::new(),
            n_steps: 512,
        }
    }
}

/// Real-coded genome: per segment `(raw duration weight, amplitude, phase)`.
#[derive(Clone, Debug)]
struct Genome(Vec<[f64; 3]>);

impl Genome {
    fn to_sequence(&self) -> CompositeSequence {
        let total: f64 = self.0.iter().map(|g| g[0]).sum();
        let n = self.0.len();
        let mut segments: Vec<Segment> = self
            .0
            .iter()
            .map(|g| Segment { f: g[0] / total, a: g[1], phi: g[2] })
            .collect();
        // absorb rounding into the last fraction
        let partial: f64 = segments[..n - 1].iter().map(|s| s.f).sum();
        segments[n - 1].f = 1.0 - partial;
        CompositeSequence { segments }
    }

    fn from_sequence(seq: &CompositeSequence) -> Self {
        Genome(seq.segments.iter().map(|s| [s.f, s.a, s.phi]).collect())
    }

    fn clamp(&mut self) {
        for g in self.0.iter_mut() {
            g[0] = g[0].clamp(0.02, 1.0);
            g[1] = g[1].clamp(-AMPLITUDE_CAP, AMPLITUDE_CAP);
            g[2] = (g[2] + PI).rem_euclid(2.0 * PI) - PI;
        }
    }
}

fn genome_loss(genome: &Genome, window: &Window, cfg: &IntegratorConfig) -> f64 {
    let field = composite_field(&genome.to_sequence());
    window_loss(&field, window, cfg).unwrap_or(f64::INFINITY)
}

/// Search for the composite sequence minimizing the window-averaged loss:
/// tournament-selection GA with Gaussian mutation for exploration, then
/// central-difference gradient descent (Adam) on the winner.
pub fn optimize_composite(n_pulses: usize, ga: &GaConfig, window: &Window) -> Result<CompositeSequence> {
    if !(1..=8).contains(&n_pulses) {
        return Err(Error::InvalidParameter(format!(
            "composite sequences support 1 to 8 pulses, got {n_pulses}"
        )));
    }
    if ga.population < 2 {
        return Err(Error::InvalidParameter("GA population must be at least 2".into()));
    }
    let cfg = IntegratorConfig::new(ga.n_steps)?;
    let mut rng = ChaCha12Rng::seed_from_u64(ga.seed);

    let mut population: Vec<Genome> = Vec::with_capacity(ga.population);
    for seq in &ga.seed_sequences {
        let mut padded = seq.clone();
        while padded.segments.len() < n_pulses {
            padded = padded.split_longest();
        }
        if padded.segments.len() == n_pulses {
            population.push(Genome::from_sequence(&padded));
        }
    }
    let amp_dist = Uniform::new_inclusive(-AMPLITUDE_CAP, AMPLITUDE_CAP);
    let phase_dist = Uniform::new(-PI, PI);
    let frac_dist = Uniform::new(0.2, 1.0);
    while population.len() < ga.population {
        let genome = Genome(
            (0..n_pulses)
                .map(|_| {
                    [
                        frac_dist.sample(&mut rng),
                        amp_dist.sample(&mut rng),
                        phase_dist.sample(&mut rng),
                    ]
                })
                .collect(),
        );
        population.push(genome);
    }

    let score = |pop: &[Genome]| -> Vec<f64> {
        pop.par_iter().map(|g| genome_loss(g, window, &cfg)).collect()
    };
    let mut fitness = score(&population);

    for _gen in 0..ga.generations {
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));

        let mut next: Vec<Genome> = order
            .iter()
            .take(ga.elite.min(population.len()))
            .map(|&k| population[k].clone())
            .collect();

        let tournament = |rng: &mut ChaCha12Rng, fitness: &[f64]| -> usize {
            let mut best = rng.gen_range(0..fitness.len());
            for _ in 0..2 {
                let c = rng.gen_range(0..fitness.len());
                if fitness[c] < fitness[best] {
                    best = c;
                }
            }
            best
        };
        while next.len() < population.len() {
            let a = &population[tournament(&mut rng, &fitness)];
            let b = &population[tournament(&mut rng, &fitness)];
            // arithmetic crossover with per-gene Gaussian mutation
            let w: f64 = rng.gen();
            let mut child = Genome(
                a.0.iter()
                    .zip(&b.0)
                    .map(|(ga_, gb)| {
                        [
                            w * ga_[0] + (1.0 - w) * gb[0],
                            w * ga_[1] + (1.0 - w) * gb[1],
                            w * ga_[2] + (1.0 - w) * gb[2],
                        ]
                    })
                    .collect(),
            );
            for g in child.0.iter_mut() {
                if rng.gen::<f64>() < 0.6 {
                    g[0] += ga.mutation_scale * 0.3 * gauss(&mut rng);
                    g[1] += ga.mutation_scale * gauss(&mut rng);
                    g[2] += ga.mutation_scale * gauss(&mut rng);
                }
            }
            child.clamp();
            next.push(child);
        }
        population = next;
        fitness = score(&population);
    }

    let best_idx = (0..population.len())
        .min_by(|&a, &b| fitness[a].total_cmp(&fitness[b]))
        .expect("population is nonempty");
    let mut best = population[best_idx].clone();
    let mut best_loss = fitness[best_idx];

    // gradient refinement (central differences + Adam) on the GA winner
    let dim = 3 * n_pulses;
    let mut adam = crate::train::Adam::new(dim, ga.refine_rate, 0.9, 0.999, 1e-8);
    let mut x: Vec<f64> = best.0.iter().flatten().copied().collect();
    let mut current = best.clone();
    for _ in 0..ga.refine_iters {
        let fd = 1e-6;
        let grad: Vec<f64> = (0..dim)
            .into_par_iter()
            .map(|k| {
                let mut xp = x.clone();
                xp[k] += fd;
                let mut xm = x.clone();
                xm[k] -= fd;
                let gp = Genome(xp.chunks(3).map(|c| [c[0], c[1], c[2]]).collect());
                let gm = Genome(xm.chunks(3).map(|c| [c[0], c[1], c[2]]).collect());
                (genome_loss(&gp, window, &cfg) - genome_loss(&gm, window, &cfg)) / (2.0 * fd)
            })
            .collect();
        adam.step(&mut x, &grad);
        current = Genome(x.chunks(3).map(|c| [c[0], c[1], c[2]]).collect());
        current.clamp();
        x = current.0.iter().flatten().copied().collect();
    }
    let refined_loss = genome_loss(&current, window, &cfg);
    if refined_loss < best_loss {
        best = current;
        best_loss = refined_loss;
    }
    let _ = best_loss;
    CompositeSequence::new(best.to_sequence().segments)
}

fn gauss(rng: &mut ChaCha12Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::CVec4;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn rectangular_resonant_rotation() {
        let pulse = rectangular_pulse(FRAC_PI_2).unwrap();
        let traj = propagate_qubit(&pulse, &IntegratorConfig::default()).unwrap();
        let c = traj.final_state();
        assert!((c.c0 - (FRAC_PI_2 / 2.0).cos()).abs() < 1e-8);
        assert!((c.cx - (FRAC_PI_2 / 2.0).sin()).abs() < 1e-8);
    }

    #[test]
    fn rectangular_full_rotation_flips_sign() {
        let pulse = rectangular_pulse(2.0 * PI - 1e-12).unwrap();
        let traj = propagate_qubit(&pulse, &IntegratorConfig::default()).unwrap();
        let c = traj.final_state();
        assert!((c.c0 + 1.0).abs() < 1e-8, "c0 = {}", c.c0);
        assert!(c.cx.abs() < 1e-6);
    }

    #[test]
    fn rectangular_rejects_bad_area() {
        assert!(rectangular_pulse(0.0).is_err());
        assert!(rectangular_pulse(2.0 * PI).is_err());
        assert!(rectangular_pulse(-1.0).is_err());
    }

    #[test]
    fn drag_zero_coeff_is_pure_cosine() {
        let pulse = drag_pulse(FRAC_PI_2, -27.9, 0.0).unwrap();
        for k in 0..64 {
            let t = T_START + (T_END - T_START) * k as f64 / 63.0;
            assert_eq!(pulse.value(t).im, 0.0);
            assert!(pulse.value(t).re >= 0.0);
        }
    }

    #[test]
    fn drag_area_is_theta_for_any_coeff() {
        for coeff in [0.0, -0.8, 1.5] {
            let pulse = drag_pulse(FRAC_PI_2, -27.9, coeff).unwrap();
            let n = 200_001;
            let h = (T_END - T_START) / (n - 1) as f64;
            let mut area = 0.0;
            for k in 0..n {
                let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                area += w * pulse.value(T_START + k as f64 * h).re * h;
            }
            assert!((area - FRAC_PI_2).abs() < 1e-9, "area {area} at coeff {coeff}");
        }
    }

    #[test]
    fn drag_rejects_zero_anharmonicity() {
        assert!(drag_pulse(FRAC_PI_2, 0.0, 1.0).is_err());
    }

    #[test]
    fn drag_spectrum_is_asymmetric() {
        use rustfft::{num_complex::Complex, FftPlanner};
        let pulse = drag_pulse(FRAC_PI_2, -27.9, -1.0).unwrap();
        const N: usize = 512;
        let mut buf: Vec<Complex<f64>> = (0..N)
            .map(|k| {
                let v = pulse.value(T_START + (T_END - T_START) * k as f64 / N as f64);
                Complex::new(v.re, v.im)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(N).process(&mut buf);
        let mut asym = 0.0;
        for k in 1..N / 2 {
            asym += (buf[k].norm() - buf[N - k].norm()).abs();
        }
        assert!(asym > 1e-3, "spectrum unexpectedly symmetric: {asym}");

        let sym_pulse = drag_pulse(FRAC_PI_2, -27.9, 0.0).unwrap();
        let mut buf: Vec<Complex<f64>> = (0..N)
            .map(|k| {
                let v = sym_pulse.value(T_START + (T_END - T_START) * k as f64 / N as f64);
                Complex::new(v.re, v.im)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(N).process(&mut buf);
        let mut sym_asym = 0.0;
        for k in 1..N / 2 {
            sym_asym += (buf[k].norm() - buf[N - k].norm()).abs();
        }
        assert!(sym_asym < 1e-10, "zero-coeff spectrum should be symmetric: {sym_asym}");
    }

    #[test]
    fn single_segment_equals_rectangular() {
        let seq = CompositeSequence::new(vec![Segment { f: 1.0, a: 0.25, phi: 0.0 }]).unwrap();
        let field = composite_field(&seq);
        let rect = rectangular_pulse(FRAC_PI_2).unwrap();
        for k in 0..100 {
            let t = T_START + (T_END - T_START) * k as f64 / 99.0;
            assert!((field.value(t) - rect.value(t)).norm() < 1e-15);
        }
    }

    #[test]
    fn global_phase_shift_rotates_plane_only() {
        let seq = CompositeSequence::new(vec![
            Segment { f: 0.3, a: 0.9, phi: 0.4 },
            Segment { f: 0.45, a: -1.2, phi: -1.0 },
            Segment { f: 0.25, a: 0.5, phi: 2.2 },
        ])
        .unwrap();
        let shifted = CompositeSequence::new(
            seq.segments
                .iter()
                .map(|s| Segment { phi: s.phi + 0.77, ..*s })
                .collect(),
        )
        .unwrap();
        let cfg = IntegratorConfig::default();
        let c_base = propagate_qubit(&composite_field(&seq), &cfg).unwrap().final_state();
        let c_shift = propagate_qubit(&composite_field(&shifted), &cfg)
            .unwrap()
            .final_state();
        assert!((c_base.c0 - c_shift.c0).abs() < 1e-9);
        assert!((c_base.cz - c_shift.cz).abs() < 1e-9);
        let rotated = c_base.rotate_xy(0.77);
        assert!((rotated.cx - c_shift.cx).abs() < 1e-9);
        assert!((rotated.cy - c_shift.cy).abs() < 1e-9);
    }

    #[test]
    fn split_longest_preserves_field() {
        let seq = CompositeSequence::new(vec![
            Segment { f: 0.6, a: 1.0, phi: 0.3 },
            Segment { f: 0.4, a: -0.7, phi: 1.1 },
        ])
        .unwrap();
        let split = seq.split_longest();
        assert_eq!(split.segments.len(), 3);
        let f1 = composite_field(&seq);
        let f2 = composite_field(&split);
        for k in 0..200 {
            let t = T_START + (T_END - T_START) * k as f64 / 199.0;
            assert_eq!(f1.value(t), f2.value(t));
        }
    }

    #[test]
    fn sequence_validation() {
        assert!(CompositeSequence::new(vec![]).is_err());
        assert!(CompositeSequence::new(vec![Segment { f: 0.5, a: 1.0, phi: 0.0 }]).is_err());
        assert!(CompositeSequence::new(vec![
            Segment { f: 0.5, a: 1.0, phi: 0.0 },
            Segment { f: 0.5, a: 1.0, phi: 0.0 },
        ])
        .is_ok());
    }

    #[test]
    fn composite_rk4_matches_expm_oracle() {
        // independent oracle: exact rotation per fine substep, which is exact
        // for the piecewise-constant field away from (aligned) breakpoints
        let seq = CompositeSequence::new(vec![
            Segment { f: 0.35, a: 1.4, phi: 0.2 },
            Segment { f: 0.25, a: -2.0, phi: -0.9 },
            Segment { f: 0.4, a: 0.8, phi: 1.7 },
        ])
        .unwrap();
        let field = composite_field(&seq);
        let detuned = Perturbed::detuned(&field, 0.45);
        let got = propagate_qubit(&detuned, &IntegratorConfig::default())
            .unwrap()
            .final_state();

        let substeps = 400_000;
        let h = (T_END - T_START) / substeps as f64;
        let mut c = [1.0, 0.0, 0.0, 0.0];
        for k in 0..substeps {
            let t = T_START + (k as f64 + 0.5) * h;
            let om = detuned.value(t);
            let rho = 0.5 * om.norm();
            let (cos, sinc) = if rho * h < 1e-8 {
                (1.0 - (rho * h) * (rho * h) / 2.0, h)
            } else {
                ((rho * h).cos(), (rho * h).sin() / rho)
            };
            let mc = crate::quantum::qubit_rhs(om, &c);
            for i in 0..4 {
                c[i] = cos * c[i] + sinc * mc[i];
            }
        }
        let oracle = CVec4::from_array(c);
        assert!((got.c0 - oracle.c0).abs() < 1e-7);
        assert!((got.cx - oracle.cx).abs() < 1e-7);
        assert!((got.cy - oracle.cy).abs() < 1e-7);
        assert!((got.cz - oracle.cz).abs() < 1e-7);
    }

    #[test]
    fn optimize_single_pulse_recovers_rectangular() {
        // a narrow window leaves the resonant π/2 rectangular pulse optimal
        let window = Window { delta_low: -0.02, delta_high: 0.02, n_grid: 9 };
        let ga = GaConfig {
            population: 24,
            generations: 40,
            refine_iters: 200,
            seed: 7,
            n_steps: 128,
            ..GaConfig::default()
        };
        let seq = optimize_composite(1, &ga, &window).unwrap();
        let area = 2.0 * PI * seq.segments[0].a.abs();
        assert!(
            (area - FRAC_PI_2).abs() < 0.05,
            "optimal single-segment area {area} vs π/2"
        );
    }

    #[test]
    fn optimized_three_pulse_beats_rectangular_on_window() {
        let window = Window { delta_low: -0.8, delta_high: 1.1, n_grid: 21 };
        let ga = GaConfig {
            population: 32,
            generations: 60,
            refine_iters: 150,
            seed: 3,
            n_steps: 128,
            ..GaConfig::default()
        };
        let cfg = IntegratorConfig::new(128).unwrap();
        let seq = optimize_composite(3, &ga, &window).unwrap();
        let composite_loss = window_loss(&composite_field(&seq), &window, &cfg).unwrap();
        let rect_loss =
            window_loss(&rectangular_pulse(FRAC_PI_2).unwrap(), &window, &cfg).unwrap();
        assert!(
            composite_loss < rect_loss,
            "composite {composite_loss} vs rectangular {rect_loss}"
        );
    }
}
