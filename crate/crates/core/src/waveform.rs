//! Waveform-level verification: build the analytic signal of a real sampled
//! trace, demodulate at the carrier, and score the trajectory induced by
//! the recovered envelope against a reference field.

use num_complex::Complex64 as C64;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ControlField, SampledField};
use crate::integrate::{propagate_qubit, IntegratorConfig};
use crate::quantum::PulseMeta;

/// A real waveform sampled at a fixed rate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WaveformTrace {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
}

/// Analytic signal via the frequency-domain construction: double positive
/// frequencies, zero negative ones, keep DC and Nyquist. The real part of
/// the result equals the input.
pub fn analytic_signal(trace: &WaveformTrace) -> Result<Vec<C64>> {
    let n = trace.samples.len();
    if n < 16 {
        return Err(Error::WaveformTooShort { len: n, min: 16 });
    }
    let mut buf: Vec<Complex<f64>> =
        trace.samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == half) {
            // DC and Nyquist stay
        } else if k < half || (n % 2 == 1 && k == half) {
            *v *= 2.0;
        } else {
            *v = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(buf.into_iter().map(|v| C64::new(v.re * scale, v.im * scale)).collect())
}

/// Shift the analytic signal down by the carrier:
/// multiply by `e^{-i 2π f_center t}`.
pub fn demodulate(analytic: &[C64], f_center: f64, sample_rate: f64) -> Result<Vec<C64>> {
    if !(f_center.abs() < 0.5 * sample_rate) {
        return Err(Error::OutsideNyquist { f_center, sample_rate });
    }
    Ok(analytic
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let t = k as f64 / sample_rate;
            v * C64::from_polar(1.0, -std::f64::consts::TAU * f_center * t)
        })
        .collect())
}

/// Least-squares scalar mapping envelope modulus onto the reference field
/// modulus on the envelope's own grid (amplitude calibration for traces in
/// uncalibrated units).
pub fn calibrate_scale<F: ControlField>(envelope: &[C64], reference: &F) -> f64 {
    use crate::field::{T_END, T_START};
    let n = envelope.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, v) in envelope.iter().enumerate() {
        let t = T_START + (T_END - T_START) * k as f64 / (n - 1) as f64;
        let e = v.norm();
        num += e * reference.value(t).norm();
        den += e * e;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Instantaneous overlap fidelity `|tr(U_exp(t) U_theory†(t))| / 2` of the
/// trajectories induced by an envelope (already in training units, spanning
/// the full window uniformly) and a reference field.
///
/// For SU(2) propagators in the c-vector representation the trace overlap
/// is the plain 4-vector dot product.
pub fn trajectory_fidelity<F: ControlField>(
    envelope: &[C64],
    reference: &F,
    cfg: &IntegratorConfig,
) -> Result<Vec<(f64, f64)>> {
    let sampled = SampledField::new(envelope.to_vec())?;
    let exp = propagate_qubit(&sampled, cfg)?;
    let theory = propagate_qubit(reference, cfg)?;
    if exp.times.len() != theory.times.len() {
        return Err(Error::GridMismatch { left: exp.times.len(), right: theory.times.len() });
    }
    Ok(exp
        .times
        .iter()
        .zip(exp.states.iter().zip(&theory.states))
        .map(|(&t, (a, b))| (t, a.dot(b).abs().min(1.0)))
        .collect())
}

/// Full verification pipeline for a scope trace that spans exactly one
/// pulse: analytic signal, demodulation, resampling to training units, and
/// trajectory fidelity. `volts_per_unit` converts the trace amplitude into
/// `Ω_2π` units; pass `None` to calibrate it by least squares (the fitted
/// scale is reported either way).
pub struct VerifyReport {
    pub fidelity: Vec<(f64, f64)>,
    pub min_fidelity: f64,
    pub scale: f64,
    pub envelope: Vec<C64>,
}

pub fn verify_waveform<F: ControlField>(
    trace: &WaveformTrace,
    f_center: f64,
    meta: &PulseMeta,
    reference: &F,
    cfg: &IntegratorConfig,
    volts_per_unit: Option<f64>,
) -> Result<VerifyReport> {
    let expected = (meta.duration_s * trace.sample_rate).round() as usize;
    if trace.samples.len().abs_diff(expected) > 1 {
        return Err(Error::DurationMismatch { got: trace.samples.len(), expected });
    }
    let analytic = analytic_signal(trace)?;
    let demod = demodulate(&analytic, f_center, trace.sample_rate)?;
    // physical envelope in rad/s is 2π f_rabi; training units divide Ω_2π
    let scale = match volts_per_unit {
        Some(v) => 1.0 / v,
        None => calibrate_scale(&demod, reference),
    };
    let envelope: Vec<C64> = demod.iter().map(|v| v * scale).collect();
    let fidelity = trajectory_fidelity(&envelope, reference, cfg)?;
    let min_fidelity = fidelity.iter().map(|(_, f)| *f).fold(f64::INFINITY, f64::min);
    Ok(VerifyReport { fidelity, min_fidelity, scale, envelope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FnField, T_END, T_START};
    use std::f64::consts::PI;

    fn interior(n: usize) -> std::ops::Range<usize> {
        (n / 20)..(n - n / 20)
    }

    #[test]
    fn cosine_becomes_complex_exponential() {
        let rate = 1e9;
        let n = 4096;
        let f = 205.0 * rate / n as f64; // ~50 MHz, integer cycles in window
        let trace = WaveformTrace {
            sample_rate: rate,
            samples: (0..n)
                .map(|k| (2.0 * PI * f * k as f64 / rate).cos())
                .collect(),
        };
        let a = analytic_signal(&trace).unwrap();
        for k in interior(n) {
            let t = k as f64 / rate;
            let expect = C64::from_polar(1.0, 2.0 * PI * f * t);
            assert!((a[k] - expect).norm() < 1e-6, "sample {k}");
        }
    }

    #[test]
    fn sine_becomes_minus_i_exponential() {
        let rate = 1e9;
        let n = 4096;
        let f = 328.0 * rate / n as f64; // ~80 MHz, integer cycles in window
        let trace = WaveformTrace {
            sample_rate: rate,
            samples: (0..n)
                .map(|k| (2.0 * PI * f * k as f64 / rate).sin())
                .collect(),
        };
        let a = analytic_signal(&trace).unwrap();
        for k in interior(n) {
            let t = k as f64 / rate;
            let expect = C64::new(0.0, -1.0) * C64::from_polar(1.0, 2.0 * PI * f * t);
            assert!((a[k] - expect).norm() < 1e-6);
        }
    }

    #[test]
    fn constant_signal_stays_real() {
        let trace = WaveformTrace { sample_rate: 1.0, samples: vec![0.7; 128] };
        let a = analytic_signal(&trace).unwrap();
        for v in a {
            assert!((v - C64::new(0.7, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn real_part_is_preserved_exactly() {
        let trace = WaveformTrace {
            sample_rate: 1.0,
            samples: (0..317)
                .map(|k| ((k as f64) * 0.37).sin() + 0.2 * ((k as f64) * 1.3).cos())
                .collect(),
        };
        let a = analytic_signal(&trace).unwrap();
        for (x, v) in trace.samples.iter().zip(&a) {
            assert!((v.re - x).abs() < 1e-10);
        }
    }

    #[test]
    fn energy_doubles_minus_edge_bins() {
        // Σ|a|² = 2 Σx² - (|X0|² + |X_{N/2}|²)/N for even N
        let n = 256;
        let samples: Vec<f64> = (0..n)
            .map(|k| 0.4 + ((k as f64) * 0.21).sin() + 0.3 * ((k as f64) * 0.9).cos())
            .collect();
        let trace = WaveformTrace { sample_rate: 1.0, samples: samples.clone() };
        let a = analytic_signal(&trace).unwrap();
        let ea: f64 = a.iter().map(|v| v.norm_sqr()).sum();
        let ex: f64 = samples.iter().map(|x| x * x).sum();

        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let corr = (buf[0].norm_sqr() + buf[n / 2].norm_sqr()) / n as f64;
        assert!((ea - (2.0 * ex - corr)).abs() < 1e-8, "{ea} vs {}", 2.0 * ex - corr);
    }

    #[test]
    fn tone_at_center_demodulates_to_constant() {
        let rate = 1e9;
        let f = 100e6;
        let n = 2048;
        let amp = 0.8;
        let trace = WaveformTrace {
            sample_rate: rate,
            samples: (0..n)
                .map(|k| amp * (2.0 * PI * f * k as f64 / rate).cos())
                .collect(),
        };
        let demod = demodulate(&analytic_signal(&trace).unwrap(), f, rate).unwrap();
        for k in interior(n) {
            assert!((demod[k] - C64::new(amp, 0.0)).norm() < 0.01 * amp);
        }
    }

    #[test]
    fn offset_tone_rotates_at_difference_frequency() {
        let rate = 1e9;
        let f = 100e6;
        let df = 10e6;
        let n = 4096;
        let trace = WaveformTrace {
            sample_rate: rate,
            samples: (0..n)
                .map(|k| (2.0 * PI * (f + df) * k as f64 / rate).cos())
                .collect(),
        };
        let demod = demodulate(&analytic_signal(&trace).unwrap(), f, rate).unwrap();
        for k in interior(n).step_by(64) {
            let t = k as f64 / rate;
            let expect = C64::from_polar(1.0, 2.0 * PI * df * t);
            assert!((demod[k] - expect).norm() < 0.01);
        }
    }

    #[test]
    fn demodulate_rejects_out_of_band() {
        let a = vec![C64::new(0.0, 0.0); 64];
        assert!(matches!(
            demodulate(&a, 0.6e9, 1e9),
            Err(Error::OutsideNyquist { .. })
        ));
    }

    #[test]
    fn exact_envelope_gives_unit_fidelity() {
        let reference = FnField(|t: f64| C64::new(0.5 * (1.0 + t.cos()), 0.2 * t.sin()));
        let n = 601;
        let envelope: Vec<C64> = (0..n)
            .map(|k| reference.value(T_START + (T_END - T_START) * k as f64 / (n - 1) as f64))
            .collect();
        let f = trajectory_fidelity(&envelope, &reference, &IntegratorConfig::default()).unwrap();
        for (_, v) in f {
            assert!(v > 1.0 - 1e-9, "fidelity {v}");
        }
    }

    #[test]
    fn overrotation_costs_known_fidelity() {
        // a 5% amplitude error on a rectangular π/2 pulse ends at
        // |cos(0.05 π/4)| overlap with the ideal trajectory
        let reference = FnField(|_| C64::new(0.25, 0.0));
        let n = 601;
        let envelope: Vec<C64> = (0..n).map(|_| C64::new(0.25 * 1.05, 0.0)).collect();
        let f = trajectory_fidelity(&envelope, &reference, &IntegratorConfig::default()).unwrap();
        let last = f.last().unwrap().1;
        let expect = (0.05_f64 * PI / 4.0 / 2.0 * 2.0).cos().abs();
        // final rotation angles: π/2 vs 1.05 π/2 -> overlap cos(0.05 π/4)
        let expect2 = (0.05 * PI / 4.0).cos();
        assert!((expect - expect2).abs() < 1e-12);
        assert!((last - expect).abs() < 1e-6, "final fidelity {last} vs {expect}");
    }

    #[test]
    fn global_phase_invariance() {
        let reference = FnField(|t: f64| C64::new(0.4 * (1.0 + t.cos()), 0.0));
        let shifted = FnField(|t: f64| {
            C64::new(0.4 * (1.0 + t.cos()), 0.0) * C64::from_polar(1.0, 0.9)
        });
        let n = 601;
        let envelope: Vec<C64> = (0..n)
            .map(|k| {
                reference.value(T_START + (T_END - T_START) * k as f64 / (n - 1) as f64)
                    * C64::from_polar(1.0, 0.9)
            })
            .collect();
        let f = trajectory_fidelity(&envelope, &shifted, &IntegratorConfig::default()).unwrap();
        for (_, v) in f {
            assert!(v > 1.0 - 1e-9);
        }
    }

    #[test]
    fn verify_rejects_duration_mismatch() {
        let meta = PulseMeta::new(60e-9).unwrap();
        let trace = WaveformTrace { sample_rate: 1e9, samples: vec![0.0; 100] };
        let reference = FnField(|_| C64::new(0.25, 0.0));
        assert!(matches!(
            verify_waveform(&trace, 100e6, &meta, &reference, &IntegratorConfig::default(), None),
            Err(Error::DurationMismatch { .. })
        ));
    }
}
