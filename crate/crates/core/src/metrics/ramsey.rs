//! Ramsey transfer probability of two identical pulses separated by a
//! z-frame rotation, and its maximum over the accumulated phase.

use serde::{Deserialize, Serialize};

use crate::quantum::CVec4;

/// `|⟨1| U e^{iβσz/2} U |0⟩|²` in closed form:
/// `4 (cx²+cy²) (c0 cos(β/2) + cz sin(β/2))²`.
pub fn ramsey_prob(c: &CVec4, beta: f64) -> f64 {
    debug_assert!((c.norm() - 1.0).abs() < 1e-6);
    let eq = c.cx * c.cx + c.cy * c.cy;
    let half = 0.5 * beta;
    let osc = c.c0 * half.cos() + c.cz * half.sin();
    4.0 * eq * osc * osc
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxP1 {
    /// Maximum transfer probability `4 (cx²+cy²)(c0²+cz²)`.
    pub p: f64,
    /// Phase of the maximum, `β0 = 2 arctan(cz/c0)`.
    pub beta0: f64,
    /// `c0 = 0`: `β0` is set to π by the limit convention.
    pub degenerate: bool,
}

/// Maximum of [`ramsey_prob`] over β and the phase it occurs at.
pub fn max_p1(c: &CVec4) -> MaxP1 {
    debug_assert!((c.norm() - 1.0).abs() < 1e-6);
    let eq = c.cx * c.cx + c.cy * c.cy;
    let p = 4.0 * eq * (c.c0 * c.c0 + c.cz * c.cz);
    if c.c0 == 0.0 {
        MaxP1 { p, beta0: std::f64::consts::PI, degenerate: true }
    } else {
        MaxP1 { p, beta0: 2.0 * (c.cz / c.c0).atan(), degenerate: false }
    }
}
