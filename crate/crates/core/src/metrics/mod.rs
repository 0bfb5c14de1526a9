//! Evaluation pipeline: simulated process tomography, χ-matrix
//! reconstruction and unitary fitting, robustness sweeps, Ramsey figures of
//! merit, and fidelity/decay estimates.

mod chi;
mod decay;
mod qpt;
mod ramsey;
mod sweep;

pub use chi::{chi_from_cvec, fidelity_chi, fit_unitary, reconstruct_chi, ChiMatrix, UnitaryFit};
pub use decay::{incoherent_bound, pseudo_identity_decay, DecayTrace, NoiseParams};
pub use qpt::{simulate_qpt, QptDataset, QptOptions};
pub use ramsey::{max_p1, ramsey_prob, MaxP1};
pub use sweep::{detuning_sweep, rmse_vs_theory, unwind_frame_phase, SweepConfig, SweepRow};
