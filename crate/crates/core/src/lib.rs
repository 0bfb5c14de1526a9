//! Design and evaluation of detuning-robust quantum-gate pulses.
//!
//! A small tanh network parametrizes a complex drive field as a smooth
//! function of time. The field is integrated through a differentiable
//! fixed-step simulation of qubit/qutrit dynamics, trained against batches of
//! randomly detuned scenarios, and evaluated with simulated process
//! tomography, robustness sweeps, reference pulses (rectangular, DRAG,
//! composite sequences), and waveform-level verification.
//!
//! All dynamics are dimensionless: the pulse occupies `t ∈ [-π, π]` so the
//! amplitude needed for a full `2π` rotation is `Ω_2π = 1`, and detunings are
//! expressed in units of `Ω_2π`. [`quantum::PulseMeta`] maps back to physical
//! units.

pub mod baselines;
pub mod error;
pub mod field;
pub mod grad;
pub mod integrate;
pub mod metrics;
pub mod net;
pub mod quantum;
pub mod train;
pub mod waveform;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Size the global worker pool. The first call wins; later calls fail.
pub fn rayon_thread_pool(n: usize) -> std::result::Result<(), rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()
}
