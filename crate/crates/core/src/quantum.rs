//! Dimensionless representations of the driven qubit/qutrit: propagator
//! parametrizations, generators of motion, and the training losses.
//!
//! The qubit propagator is kept as a real 4-vector `(c0, cx, cy, cz)` with
//! `U = c0*σ0 - i(cx*σx + cy*σy + cz*σz)`, so the equation of motion is a
//! real linear ODE `∂t c = M(Ω) c`. The qutrit propagator is a plain 3x3
//! complex matrix.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 3x3 complex matrix, stored by rows.
pub type CMat3 = [[C64; 3]; 3];

/// Real 4-vector `(c0, cx, cy, cz)` parametrizing an SU(2) propagator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CVec4 {
    pub c0: f64,
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
}

impl CVec4 {
    pub const IDENTITY: Self = Self { c0: 1.0, cx: 0.0, cy: 0.0, cz: 0.0 };

    pub fn new(c0: f64, cx: f64, cy: f64, cz: f64) -> Self {
        Self { c0, cx, cy, cz }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self { c0: a[0], cx: a[1], cy: a[2], cz: a[3] }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.c0, self.cx, self.cy, self.cz]
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.c0 * other.c0 + self.cx * other.cx + self.cy * other.cy + self.cz * other.cz
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.c0 / n, self.cx / n, self.cy / n, self.cz / n)
    }

    /// Rotate the equatorial components: `cx + i*cy -> (cx + i*cy) e^{i*phase}`.
    pub fn rotate_xy(&self, phase: f64) -> Self {
        let (s, c) = phase.sin_cos();
        Self {
            c0: self.c0,
            cx: c * self.cx - s * self.cy,
            cy: s * self.cx + c * self.cy,
            cz: self.cz,
        }
    }
}

/// 2x2 complex matrix, stored by rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary2(pub [[C64; 2]; 2]);

impl Unitary2 {
    pub fn identity() -> Self {
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        Self([[o, z], [z, o]])
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j];
            }
        }
        Self(out)
    }

    pub fn adjoint(&self) -> Self {
        Self([
            [self.0[0][0].conj(), self.0[1][0].conj()],
            [self.0[0][1].conj(), self.0[1][1].conj()],
        ])
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Largest entry-wise deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                d = d.max((p.0[i][j] - target).norm());
            }
        }
        d
    }

    /// Apply to a density matrix: `U ρ U†`.
    pub fn conjugate_density(&self, rho: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
        let u = &self.0;
        let mut ur = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                ur[i][j] = u[i][0] * rho[0][j] + u[i][1] * rho[1][j];
            }
        }
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = ur[i][0] * u[j][0].conj() + ur[i][1] * u[j][1].conj();
            }
        }
        out
    }
}

/// 3x3 complex matrix, stored by rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary3(pub CMat3);

impl Unitary3 {
    pub fn identity() -> Self {
        let mut m = [[C64::new(0.0, 0.0); 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = C64::new(1.0, 0.0);
        }
        Self(m)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = [[C64::new(0.0, 0.0); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        Self(out)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = [[C64::new(0.0, 0.0); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[j][i].conj();
            }
        }
        Self(out)
    }

    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                d = d.max((p.0[i][j] - target).norm());
            }
        }
        d
    }

    /// Population leaked out of the computational subspace by a pulse acting
    /// on `|0⟩` or `|1⟩`: `|u20|² + |u21|²`.
    pub fn leakage(&self) -> f64 {
        self.0[2][0].norm_sqr() + self.0[2][1].norm_sqr()
    }

    pub fn conjugate_density(&self, rho: &CMat3) -> CMat3 {
        let u = &self.0;
        let mut ur = [[C64::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                ur[i][j] = (0..3).map(|k| u[i][k] * rho[k][j]).sum();
            }
        }
        let mut out = [[C64::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| ur[i][k] * u[j][k].conj()).sum();
            }
        }
        out
    }
}

/// Three-level extension of the driven qubit: `Δ` is the (dimensionless)
/// second-level detuning `2π α T` and `λ` the 1-2 vs 0-1 coupling ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QutritModel {
    pub delta: f64,
    pub lambda: f64,
}

impl QutritModel {
    pub fn new(delta: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite() && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "qutrit model needs finite delta and lambda > 0, got delta = {delta}, lambda = {lambda}"
            )));
        }
        Ok(Self { delta, lambda })
    }

    /// Build from physical anharmonicity (Hz) and pulse duration (s):
    /// `Δ = 2π α T`.
    pub fn from_physical(anharmonicity_hz: f64, duration_s: f64, lambda: f64) -> Result<Self> {
        Self::new(2.0 * PI * anharmonicity_hz * duration_s, lambda)
    }
}

/// Which dynamics a pulse is propagated through.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum System {
    Qubit,
    Qutrit(QutritModel),
}

/// Physical pulse metadata. The training time domain is always `t ∈ [-π, π]`;
/// this maps it onto a physical duration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseMeta {
    pub duration_s: f64,
}

impl PulseMeta {
    pub fn new(duration_s: f64) -> Result<Self> {
        if !(duration_s > 0.0 && duration_s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pulse duration must be positive, got {duration_s}"
            )));
        }
        Ok(Self { duration_s })
    }

    /// Amplitude of a full rotation over the pulse, in rad/s.
    pub fn omega_2pi(&self) -> f64 {
        2.0 * PI / self.duration_s
    }

    /// Physical detuning frequency (Hz) of a dimensionless detuning.
    pub fn delta_to_hz(&self, delta: f64) -> f64 {
        delta / self.duration_s
    }
}

/// Generator of the qubit equation of motion `∂t c = M c` for drive `Ω`.
/// `M` is antisymmetric.
pub fn qubit_generator(omega: C64) -> [[f64; 4]; 4] {
    let (x, y) = (omega.re, omega.im);
    [
        [0.0, -0.5 * x, -0.5 * y, 0.0],
        [0.5 * x, 0.0, 0.0, 0.5 * y],
        [0.5 * y, 0.0, 0.0, -0.5 * x],
        [0.0, -0.5 * y, 0.5 * x, 0.0],
    ]
}

/// Right-hand side `M(Ω) c` without materializing the matrix.
#[inline]
pub fn qubit_rhs(omega: C64, c: &[f64; 4]) -> [f64; 4] {
    let (x, y) = (omega.re, omega.im);
    [
        -0.5 * (x * c[1] + y * c[2]),
        0.5 * (x * c[0] + y * c[3]),
        0.5 * (y * c[0] - x * c[3]),
        0.5 * (x * c[2] - y * c[1]),
    ]
}

const SU2_TOL: f64 = 1e-6;

/// Build the SU(2) matrix `U = c0*σ0 - i(cx*σx + cy*σy + cz*σz)`.
///
/// The input must be normalized to within 1e-6.
pub fn cvec_to_unitary(c: &CVec4) -> Result<Unitary2> {
    let norm = c.norm();
    if (norm - 1.0).abs() > SU2_TOL {
        return Err(Error::NotNormalized { norm, tol: SU2_TOL });
    }
    Ok(Unitary2([
        [C64::new(c.c0, -c.cz), C64::new(-c.cy, -c.cx)],
        [C64::new(c.cy, -c.cx), C64::new(c.c0, c.cz)],
    ]))
}

/// Invert [`cvec_to_unitary`]. The input must be special unitary to within
/// 1e-6; matrices with a leftover global phase are rejected, not projected.
pub fn unitary_to_cvec(u: &Unitary2) -> Result<CVec4> {
    let defect = u.unitarity_defect();
    if defect > SU2_TOL {
        return Err(Error::NotUnitary { defect, tol: SU2_TOL });
    }
    let det = u.det();
    if (det - C64::new(1.0, 0.0)).norm() > SU2_TOL {
        return Err(Error::NotSpecialUnitary { det_re: det.re, det_im: det.im });
    }
    Ok(block_cvec_raw2(&u.0))
}

/// Coefficient extraction without any normalization or validity checks.
#[inline]
fn block_cvec_raw2(u: &[[C64; 2]; 2]) -> CVec4 {
    CVec4 {
        c0: 0.5 * (u[0][0].re + u[1][1].re),
        cx: -0.5 * (u[0][1].im + u[1][0].im),
        cy: 0.5 * (u[1][0].re - u[0][1].re),
        cz: -0.5 * (u[0][0].im - u[1][1].im),
    }
}

/// Raw (unnormalized) c-coefficients of the qubit block of a qutrit
/// propagator. With leakage present the result is not a unit vector.
pub fn qubit_block_cvec(u: &Unitary3) -> CVec4 {
    let b = [
        [u.0[0][0], u.0[0][1]],
        [u.0[1][0], u.0[1][1]],
    ];
    block_cvec_raw2(&b)
}

/// Driven qutrit Hamiltonian
/// `H = (1/2)[Ω|1⟩⟨0| + λΩ|2⟩⟨1| + h.c.] + Δ|2⟩⟨2|`.
pub fn qutrit_hamiltonian(omega: C64, model: &QutritModel) -> CMat3 {
    let z = C64::new(0.0, 0.0);
    let d = 0.5 * omega;
    let g = 0.5 * model.lambda * omega;
    [
        [z, d.conj(), z],
        [d, z, g.conj()],
        [z, g, C64::new(model.delta, 0.0)],
    ]
}

/// Infidelity of a qubit operation against a `π/2` rotation in a vertical
/// plane: `cz² + (c0 - 1/√2)²`.
pub fn qubit_loss(c: &CVec4) -> f64 {
    debug_assert!((c.norm() - 1.0).abs() < 1e-5, "qubit_loss expects a unit c-vector");
    let d0 = c.c0 - FRAC_1_SQRT_2;
    c.cz * c.cz + d0 * d0
}

/// Qutrit training loss: the qubit-block infidelity plus an explicit
/// equatorial-weight term (no longer implied by normalization once leakage
/// exists) and a leakage penalty.
pub fn qutrit_loss(u: &Unitary3, leak_weight: f64) -> f64 {
    let c = qubit_block_cvec(u);
    let d0 = c.c0 - FRAC_1_SQRT_2;
    let eq = c.cx * c.cx + c.cy * c.cy - 0.5;
    d0 * d0 + c.cz * c.cz + eq * eq + leak_weight * u.leakage()
}
