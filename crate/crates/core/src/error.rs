//! Crate-wide error type.

use crate::train::TrainReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("field value is not finite at t = {t}")]
    NonFiniteField { t: f64 },

    #[error("c-vector is not normalized (|c| = {norm}, tolerance {tol})")]
    NotNormalized { norm: f64, tol: f64 },

    #[error("matrix is not unitary (defect {defect}, tolerance {tol})")]
    NotUnitary { defect: f64, tol: f64 },

    #[error("matrix is not SU(2): det = {det_re}{det_im:+}i (expected 1)")]
    NotSpecialUnitary { det_re: f64, det_im: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integrator needs at least {min} steps, got {got}")]
    TooFewSteps { got: usize, min: usize },

    #[error("checkpoint version mismatch: file has {found}, expected {expected}")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("checkpoint layer {layer} has shape {found_rows}x{found_cols}, expected {rows}x{cols}")]
    CheckpointShape {
        layer: usize,
        found_rows: usize,
        found_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("checkpoint is malformed: {0}")]
    CheckpointFormat(String),

    #[error("non-finite gradient at iteration {iter}")]
    NonFiniteGradient { iter: usize },

    #[error("non-finite loss at iteration {iter}")]
    NonFiniteLoss { iter: usize },

    #[error("training diverged at iteration {iter} (mean loss {loss:.3e})")]
    Diverged {
        iter: usize,
        loss: f64,
        report: Box<TrainReport>,
    },

    #[error("grids do not match: {left} vs {right} points")]
    GridMismatch { left: usize, right: usize },

    #[error("tomography dataset is incomplete or inconsistent: {0}")]
    BadDataset(String),

    #[error("unphysical noise parameters: T2 = {t2_s} s exceeds 2*T1 = {max_s} s")]
    UnphysicalNoise { t2_s: f64, max_s: f64 },

    #[error("waveform is too short: {len} samples (need at least {min})")]
    WaveformTooShort { len: usize, min: usize },

    #[error("demodulation frequency {f_center} Hz is outside the Nyquist band (rate {sample_rate} Hz)")]
    OutsideNyquist { f_center: f64, sample_rate: f64 },

    #[error("waveform duration mismatch: {got} samples vs {expected} expected (tolerance 1)")]
    DurationMismatch { got: usize, expected: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
