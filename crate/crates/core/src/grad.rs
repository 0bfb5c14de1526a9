//! Losses and their exact-to-solver gradients with respect to the control
//! network parameters.
//!
//! The gradient is computed by reverse accumulation through the unrolled RK4
//! steps: the network is evaluated once on the stage-time grid, each
//! scenario's propagation backpropagates its loss onto the shared grid of
//! base-field values, and a single network backward pass maps those adjoints
//! onto the parameters. The result differentiates the *discrete* solver map,
//! so it matches central finite differences of the same map to roundoff, not
//! merely to the continuous-ODE limit.
//!
//! Complex adjoints use the convention `z̄ = ∂L/∂Re(z) + i ∂L/∂Im(z)`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{T_END, T_START};
use crate::integrate::{qutrit_rhs, rk4_qutrit_step, IntegratorConfig};
use crate::net::{NetworkParams, Scenario, N_PARAMS, WIDTH};
use crate::quantum::{qubit_rhs, QutritModel, System};

// Offsets of each parameter block in the canonical flat vector.
const OFF_W1: usize = 0;
const OFF_B1: usize = OFF_W1 + WIDTH * 2;
const OFF_W2: usize = OFF_B1 + WIDTH;
const OFF_B2: usize = OFF_W2 + WIDTH * WIDTH;
const OFF_W3: usize = OFF_B2 + WIDTH;
const OFF_B3: usize = OFF_W3 + WIDTH * WIDTH;
const OFF_W4: usize = OFF_B3 + WIDTH;
const OFF_B4: usize = OFF_W4 + 2 * WIDTH;

/// Network forward pass on the stage-time grid, with everything the backward
/// pass needs.
struct MlpTape {
    ts: Vec<f64>,
    a1: Vec<[f64; WIDTH]>,
    a2: Vec<[f64; WIDTH]>,
    a3: Vec<[f64; WIDTH]>,
    tanh_o1: Vec<f64>,
    phi: Vec<f64>,
    /// Unperturbed base field `Ω_max tanh(o1) e^{i o2}` at each stage time.
    base: Vec<C64>,
}

fn stage_times(n_steps: usize) -> (Vec<f64>, f64) {
    let h = (T_END - T_START) / n_steps as f64;
    let ts = (0..=2 * n_steps)
        .map(|j| T_START + 0.5 * h * j as f64)
        .collect();
    (ts, h)
}

fn mlp_forward_grid(params: &NetworkParams, theta: f64, ts: Vec<f64>) -> MlpTape {
    let n = ts.len();
    let mut tape = MlpTape {
        ts,
        a1: vec![[0.0; WIDTH]; n],
        a2: vec![[0.0; WIDTH]; n],
        a3: vec![[0.0; WIDTH]; n],
        tanh_o1: vec![0.0; n],
        phi: vec![0.0; n],
        base: vec![C64::new(0.0, 0.0); n],
    };
    for j in 0..n {
        let t = tape.ts[j];
        let (a1, a2, a3) = (&mut tape.a1[j], &mut tape.a2[j], &mut tape.a3[j]);
        for i in 0..WIDTH {
            a1[i] = (params.w1[i][0] * t + params.w1[i][1] * theta + params.b1[i]).tanh();
        }
        for i in 0..WIDTH {
            let mut z = params.b2[i];
            for k in 0..WIDTH {
                z += params.w2[i][k] * a1[k];
            }
            a2[i] = z.tanh();
        }
        for i in 0..WIDTH {
            let mut z = params.b3[i];
            for k in 0..WIDTH {
                z += params.w3[i][k] * a2[k];
            }
            a3[i] = z.tanh();
        }
        let mut o = [params.b4[0], params.b4[1]];
        for (i, oi) in o.iter_mut().enumerate() {
            for k in 0..WIDTH {
                *oi += params.w4[i][k] * a3[k];
            }
        }
        tape.tanh_o1[j] = o[0].tanh();
        tape.phi[j] = o[1];
        tape.base[j] = params.omega_max * tape.tanh_o1[j] * C64::from_polar(1.0, o[1]);
    }
    tape
}

/// Map base-field adjoints back onto the flat parameter vector.
fn mlp_backward_grid(params: &NetworkParams, tape: &MlpTape, nbar: &[C64], theta: f64) -> Vec<f64> {
    let mut g = vec![0.0; N_PARAMS];
    for j in 0..tape.ts.len() {
        let nb = nbar[j];
        if nb.re == 0.0 && nb.im == 0.0 {
            continue;
        }
        let (sin_phi, cos_phi) = tape.phi[j].sin_cos();
        // signed amplitude A = Ω_max tanh(o1); base = A e^{iφ}
        let abar = cos_phi * nb.re + sin_phi * nb.im;
        let a = params.omega_max * tape.tanh_o1[j];
        let phibar = a * (cos_phi * nb.im - sin_phi * nb.re);
        let o1bar = abar * params.omega_max * (1.0 - tape.tanh_o1[j] * tape.tanh_o1[j]);
        let d4 = [o1bar, phibar];

        let (a1, a2, a3) = (&tape.a1[j], &tape.a2[j], &tape.a3[j]);
        let mut d3 = [0.0; WIDTH];
        for k in 0..WIDTH {
            let up = params.w4[0][k] * d4[0] + params.w4[1][k] * d4[1];
            d3[k] = up * (1.0 - a3[k] * a3[k]);
        }
        let mut d2 = [0.0; WIDTH];
        for k in 0..WIDTH {
            let mut up = 0.0;
            for i in 0..WIDTH {
                up += params.w3[i][k] * d3[i];
            }
            d2[k] = up * (1.0 - a2[k] * a2[k]);
        }
        let mut d1 = [0.0; WIDTH];
        for k in 0..WIDTH {
            let mut up = 0.0;
            for i in 0..WIDTH {
                up += params.w2[i][k] * d2[i];
            }
            d1[k] = up * (1.0 - a1[k] * a1[k]);
        }

        for i in 0..2 {
            for k in 0..WIDTH {
                g[OFF_W4 + i * WIDTH + k] += d4[i] * a3[k];
            }
            g[OFF_B4 + i] += d4[i];
        }
        for i in 0..WIDTH {
            for k in 0..WIDTH {
                g[OFF_W3 + i * WIDTH + k] += d3[i] * a2[k];
            }
            g[OFF_B3 + i] += d3[i];
        }
        for i in 0..WIDTH {
            for k in 0..WIDTH {
                g[OFF_W2 + i * WIDTH + k] += d2[i] * a1[k];
            }
            g[OFF_B2 + i] += d2[i];
        }
        let t = tape.ts[j];
        for i in 0..WIDTH {
            g[OFF_W1 + i * 2] += d1[i] * t;
            g[OFF_W1 + i * 2 + 1] += d1[i] * theta;
            g[OFF_B1 + i] += d1[i];
        }
    }
    g
}

/// Adjoint of `x, y = Re Ω, Im Ω` through one generator application
/// `k = M(Ω) a`, given the stage adjoint `v = k̄` and the stage input `a`.
#[inline]
fn m_contract(v: &[f64; 4], a: &[f64; 4]) -> C64 {
    C64::new(
        0.5 * (v[1] * a[0] - v[0] * a[1] - v[2] * a[3] + v[3] * a[2]),
        0.5 * (v[2] * a[0] - v[0] * a[2] + v[1] * a[3] - v[3] * a[1]),
    )
}

#[inline]
fn axpy4(c: &[f64; 4], s: f64, k: &[f64; 4]) -> [f64; 4] {
    [c[0] + s * k[0], c[1] + s * k[1], c[2] + s * k[2], c[3] + s * k[3]]
}

/// Qubit propagation and loss for one scenario; optionally backpropagates to
/// the shared base-field grid.
fn qubit_scenario(
    base: &[C64],
    ts: &[f64],
    h: f64,
    scenario: &Scenario,
    mut nbar: Option<&mut [C64]>,
) -> f64 {
    let n = (ts.len() - 1) / 2;
    let amp = 1.0 + scenario.alpha;
    // perturbation factor (1+α) e^{iδt} at each stage time
    let pf: Vec<C64> = ts
        .iter()
        .map(|&t| amp * C64::from_polar(1.0, scenario.delta * t))
        .collect();
    let field = |j: usize| pf[j] * base[j];

    // forward, storing the state at every step boundary
    let mut traj = Vec::with_capacity(n + 1);
    let mut c = [1.0, 0.0, 0.0, 0.0];
    traj.push(c);
    for k in 0..n {
        c = crate::integrate::rk4_qubit_step(&c, field(2 * k), field(2 * k + 1), field(2 * k + 2), h);
        traj.push(c);
    }
    let d0 = c[0] - FRAC_1_SQRT_2;
    let loss = c[3] * c[3] + d0 * d0;

    let Some(nbar) = nbar.as_deref_mut() else {
        return loss;
    };

    let mut ybar = [2.0 * d0, 0.0, 0.0, 2.0 * c[3]];
    for k in (0..n).rev() {
        let c0 = traj[k];
        let (u1, u2, u3) = (field(2 * k), field(2 * k + 1), field(2 * k + 2));

        // recompute the stage states
        let k1 = qubit_rhs(u1, &c0);
        let a2 = axpy4(&c0, 0.5 * h, &k1);
        let k2 = qubit_rhs(u2, &a2);
        let a3 = axpy4(&c0, 0.5 * h, &k2);
        let k3 = qubit_rhs(u2, &a3);
        let a4 = axpy4(&c0, h, &k3);

        // reverse sweep; M is antisymmetric so Mᵀ v = -M v
        let kbar4 = [
            h / 6.0 * ybar[0],
            h / 6.0 * ybar[1],
            h / 6.0 * ybar[2],
            h / 6.0 * ybar[3],
        ];
        let mk = qubit_rhs(u3, &kbar4);
        let abar4 = [-mk[0], -mk[1], -mk[2], -mk[3]];
        let ubar3 = m_contract(&kbar4, &a4);

        let kbar3 = [
            h / 3.0 * ybar[0] + h * abar4[0],
            h / 3.0 * ybar[1] + h * abar4[1],
            h / 3.0 * ybar[2] + h * abar4[2],
            h / 3.0 * ybar[3] + h * abar4[3],
        ];
        let mk = qubit_rhs(u2, &kbar3);
        let abar3 = [-mk[0], -mk[1], -mk[2], -mk[3]];
        let mut ubar2 = m_contract(&kbar3, &a3);

        let kbar2 = [
            h / 3.0 * ybar[0] + 0.5 * h * abar3[0],
            h / 3.0 * ybar[1] + 0.5 * h * abar3[1],
            h / 3.0 * ybar[2] + 0.5 * h * abar3[2],
            h / 3.0 * ybar[3] + 0.5 * h * abar3[3],
        ];
        let mk = qubit_rhs(u2, &kbar2);
        let abar2 = [-mk[0], -mk[1], -mk[2], -mk[3]];
        ubar2 += m_contract(&kbar2, &a2);

        let kbar1 = [
            h / 6.0 * ybar[0] + 0.5 * h * abar2[0],
            h / 6.0 * ybar[1] + 0.5 * h * abar2[1],
            h / 6.0 * ybar[2] + 0.5 * h * abar2[2],
            h / 6.0 * ybar[3] + 0.5 * h * abar2[3],
        ];
        let mk = qubit_rhs(u1, &kbar1);
        let abar1 = [-mk[0], -mk[1], -mk[2], -mk[3]];
        let ubar1 = m_contract(&kbar1, &c0);

        for i in 0..4 {
            ybar[i] += abar1[i] + abar2[i] + abar3[i] + abar4[i];
        }

        // Ω_j = pf_j N_j, so N̄_j += conj(pf_j) Ω̄_j. The mid-stage value
        // feeds both k2 and k3.
        nbar[2 * k] += ubar1 * pf[2 * k].conj();
        nbar[2 * k + 1] += ubar2 * pf[2 * k + 1].conj();
        nbar[2 * k + 2] += ubar3 * pf[2 * k + 2].conj();
    }
    loss
}

type CMat = [[C64; 3]; 3];

#[inline]
fn mat_axpy(w: &CMat, s: f64, k: &CMat) -> CMat {
    let mut out = *w;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = w[i][j] + s * k[i][j];
        }
    }
    out
}

/// Adjoint of the stage input: `ā = i H_I k̄` (H_I is Hermitian).
#[inline]
fn qutrit_rhs_adjoint(d: C64, g: C64, kbar: &CMat) -> CMat {
    let pi = C64::new(0.0, 1.0);
    let dc = d.conj();
    let gc = g.conj();
    let mut a = [[C64::new(0.0, 0.0); 3]; 3];
    for c in 0..3 {
        a[0][c] = pi * (dc * kbar[1][c]);
        a[1][c] = pi * (d * kbar[0][c] + gc * kbar[2][c]);
        a[2][c] = pi * (g * kbar[1][c]);
    }
    a
}

/// Adjoints of the stage couplings `(d, g)` from one stage `k = -i H_I a`.
#[inline]
fn qutrit_coupling_adjoint(kbar: &CMat, a: &CMat) -> (C64, C64) {
    let i = C64::new(0.0, 1.0);
    let rowdot = |u: &[C64; 3], v: &[C64; 3]| -> C64 {
        u[0] * v[0].conj() + u[1] * v[1].conj() + u[2] * v[2].conj()
    };
    let dbar = i * rowdot(&kbar[1], &a[0]) - i * rowdot(&kbar[0], &a[1]).conj();
    let gbar = i * rowdot(&kbar[2], &a[1]) - i * rowdot(&kbar[1], &a[2]).conj();
    (dbar, gbar)
}

/// Qutrit propagation and loss for one scenario in the Δ-rotating frame.
/// The loss only reads quantities invariant under that frame, so no lab
/// transform is needed here.
fn qutrit_scenario(
    base: &[C64],
    ts: &[f64],
    h: f64,
    scenario: &Scenario,
    model: &QutritModel,
    leak_weight: f64,
    mut nbar: Option<&mut [C64]>,
) -> f64 {
    let n = (ts.len() - 1) / 2;
    let amp = 1.0 + scenario.alpha;
    // perturbation factor, Δ-frame factor, and stage couplings per stage time
    let pf: Vec<C64> = ts
        .iter()
        .map(|&t| amp * C64::from_polar(1.0, scenario.delta * t))
        .collect();
    let rot: Vec<C64> = ts
        .iter()
        .map(|&t| C64::from_polar(1.0, model.delta * (t + std::f64::consts::PI)))
        .collect();
    let couplings: Vec<(C64, C64)> = (0..ts.len())
        .map(|j| {
            let omega = pf[j] * base[j];
            (0.5 * omega, 0.5 * model.lambda * omega * rot[j])
        })
        .collect();

    let mut traj = Vec::with_capacity(n + 1);
    let mut w = [[C64::new(0.0, 0.0); 3]; 3];
    for (i, row) in w.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    traj.push(w);
    for k in 0..n {
        let stage = [couplings[2 * k], couplings[2 * k + 1], couplings[2 * k + 2]];
        w = rk4_qutrit_step(&w, &stage, h);
        traj.push(w);
    }

    let c0v = 0.5 * (w[0][0].re + w[1][1].re);
    let cz = 0.5 * (w[1][1].im - w[0][0].im);
    let cx = -0.5 * (w[0][1].im + w[1][0].im);
    let cy = 0.5 * (w[1][0].re - w[0][1].re);
    let d0 = c0v - FRAC_1_SQRT_2;
    let q = cx * cx + cy * cy - 0.5;
    let leak = w[2][0].norm_sqr() + w[2][1].norm_sqr();
    let loss = d0 * d0 + cz * cz + q * q + leak_weight * leak;

    let Some(nbar) = nbar.as_deref_mut() else {
        return loss;
    };

    let (lc0, lcz) = (2.0 * d0, 2.0 * cz);
    let (lcx, lcy) = (4.0 * q * cx, 4.0 * q * cy);
    let mut ybar = [[C64::new(0.0, 0.0); 3]; 3];
    ybar[0][0] = C64::new(0.5 * lc0, -0.5 * lcz);
    ybar[1][1] = C64::new(0.5 * lc0, 0.5 * lcz);
    ybar[0][1] = C64::new(-0.5 * lcy, -0.5 * lcx);
    ybar[1][0] = C64::new(0.5 * lcy, -0.5 * lcx);
    ybar[2][0] = 2.0 * leak_weight * w[2][0];
    ybar[2][1] = 2.0 * leak_weight * w[2][1];

    for k in (0..n).rev() {
        let w0 = traj[k];
        let stage = [couplings[2 * k], couplings[2 * k + 1], couplings[2 * k + 2]];

        let k1 = qutrit_rhs(stage[0].0, stage[0].1, &w0);
        let a2 = mat_axpy(&w0, 0.5 * h, &k1);
        let k2 = qutrit_rhs(stage[1].0, stage[1].1, &a2);
        let a3 = mat_axpy(&w0, 0.5 * h, &k2);
        let k3 = qutrit_rhs(stage[1].0, stage[1].1, &a3);
        let a4 = mat_axpy(&w0, h, &k3);

        let zero = [[C64::new(0.0, 0.0); 3]; 3];
        let kbar4 = mat_axpy(&zero, h / 6.0, &ybar);
        let abar4 = qutrit_rhs_adjoint(stage[2].0, stage[2].1, &kbar4);
        let (db3, gb3) = qutrit_coupling_adjoint(&kbar4, &a4);

        let mut kbar3 = mat_axpy(&zero, h / 3.0, &ybar);
        kbar3 = mat_axpy(&kbar3, h, &abar4);
        let abar3 = qutrit_rhs_adjoint(stage[1].0, stage[1].1, &kbar3);
        let (mut db2, mut gb2) = qutrit_coupling_adjoint(&kbar3, &a3);

        let mut kbar2 = mat_axpy(&zero, h / 3.0, &ybar);
        kbar2 = mat_axpy(&kbar2, 0.5 * h, &abar3);
        let abar2 = qutrit_rhs_adjoint(stage[1].0, stage[1].1, &kbar2);
        let (db, gb) = qutrit_coupling_adjoint(&kbar2, &a2);
        db2 += db;
        gb2 += gb;

        let mut kbar1 = mat_axpy(&zero, h / 6.0, &ybar);
        kbar1 = mat_axpy(&kbar1, 0.5 * h, &abar2);
        let abar1 = qutrit_rhs_adjoint(stage[0].0, stage[0].1, &kbar1);
        let (db1, gb1) = qutrit_coupling_adjoint(&kbar1, &w0);

        for i in 0..3 {
            for j in 0..3 {
                ybar[i][j] += abar1[i][j] + abar2[i][j] + abar3[i][j] + abar4[i][j];
            }
        }

        // d = Ω/2 and g = (λ/2) e^{iΔ(t+π)} Ω, then Ω = pf N.
        let mut push = |j: usize, dbar: C64, gbar: C64| {
            let obar = 0.5 * dbar + (0.5 * model.lambda * rot[j]).conj() * gbar;
            nbar[j] += obar * pf[j].conj();
        };
        push(2 * k, db1, gb1);
        push(2 * k + 1, db2, gb2);
        push(2 * k + 2, db3, gb3);
    }
    loss
}

fn scenario_pass(
    tape: &MlpTape,
    h: f64,
    scenario: &Scenario,
    system: &System,
    leak_weight: f64,
    nbar: Option<&mut [C64]>,
) -> f64 {
    match system {
        System::Qubit => qubit_scenario(&tape.base, &tape.ts, h, scenario, nbar),
        System::Qutrit(model) => {
            qutrit_scenario(&tape.base, &tape.ts, h, scenario, model, leak_weight, nbar)
        }
    }
}

fn check_params(params: &NetworkParams) -> Result<()> {
    if params.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter("network parameters are not finite".into()))
    }
}

fn uniform_theta(scenarios: &[Scenario]) -> Result<f64> {
    let theta = scenarios
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty scenario batch".into()))?
        .theta;
    if scenarios.iter().any(|s| s.theta != theta) {
        return Err(Error::InvalidParameter(
            "scenario batch must share a single target angle".into(),
        ));
    }
    Ok(theta)
}

/// Loss of a single scenario (forward only).
pub fn scenario_loss(
    params: &NetworkParams,
    scenario: &Scenario,
    system: &System,
    leak_weight: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    check_params(params)?;
    let (ts, h) = stage_times(cfg.n_steps);
    let tape = mlp_forward_grid(params, scenario.theta, ts);
    let loss = scenario_pass(&tape, h, scenario, system, leak_weight, None);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { iter: 0 });
    }
    Ok(loss)
}

/// Loss and its gradient over all network parameters for one scenario.
pub fn loss_and_gradient(
    params: &NetworkParams,
    scenario: &Scenario,
    system: &System,
    leak_weight: f64,
    cfg: &IntegratorConfig,
) -> Result<(f64, Vec<f64>)> {
    batch_loss_and_gradient(params, std::slice::from_ref(scenario), system, leak_weight, cfg)
}

/// Mean loss over a batch of scenarios (forward only). Scenarios are
/// evaluated in parallel and reduced in batch order.
pub fn batch_loss(
    params: &NetworkParams,
    scenarios: &[Scenario],
    system: &System,
    leak_weight: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    check_params(params)?;
    let theta = uniform_theta(scenarios)?;
    let (ts, h) = stage_times(cfg.n_steps);
    let tape = mlp_forward_grid(params, theta, ts);
    let losses: Vec<f64> = scenarios
        .par_iter()
        .map(|sc| scenario_pass(&tape, h, sc, system, leak_weight, None))
        .collect();
    let mean = losses.iter().sum::<f64>() / losses.len() as f64;
    if !mean.is_finite() {
        return Err(Error::NonFiniteLoss { iter: 0 });
    }
    Ok(mean)
}

/// Mean loss over a batch and its gradient. The per-scenario field adjoints
/// are accumulated in batch order, so the result is deterministic for a
/// fixed batch regardless of thread count.
pub fn batch_loss_and_gradient(
    params: &NetworkParams,
    scenarios: &[Scenario],
    system: &System,
    leak_weight: f64,
    cfg: &IntegratorConfig,
) -> Result<(f64, Vec<f64>)> {
    check_params(params)?;
    let theta = uniform_theta(scenarios)?;
    let (ts, h) = stage_times(cfg.n_steps);
    let tape = mlp_forward_grid(params, theta, ts);
    let n_grid = tape.ts.len();

    let passes: Vec<(f64, Vec<C64>)> = if scenarios.len() == 1 {
        let mut nbar = vec![C64::new(0.0, 0.0); n_grid];
        let loss = scenario_pass(&tape, h, &scenarios[0], system, leak_weight, Some(&mut nbar));
        vec![(loss, nbar)]
    } else {
        scenarios
            .par_iter()
            .map(|sc| {
                let mut nbar = vec![C64::new(0.0, 0.0); n_grid];
                let loss = scenario_pass(&tape, h, sc, system, leak_weight, Some(&mut nbar));
                (loss, nbar)
            })
            .collect()
    };

    let inv = 1.0 / scenarios.len() as f64;
    let mut mean = 0.0;
    let mut nbar_total = vec![C64::new(0.0, 0.0); n_grid];
    for (loss, nbar) in &passes {
        mean += loss * inv;
        for (acc, v) in nbar_total.iter_mut().zip(nbar) {
            *acc += inv * v;
        }
    }
    if !mean.is_finite() {
        return Err(Error::NonFiniteLoss { iter: 0 });
    }
    let grad = mlp_backward_grid(params, &tape, &nbar_total, theta);
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient { iter: 0 });
    }
    Ok((mean, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::init_params;
    use crate::quantum::QutritModel;
    use rand::Rng;
    use rand::SeedableRng;
    use std::f64::consts::FRAC_PI_2;

    fn fd_check(system: System, scenario: Scenario, n_params_checked: usize, seed: u64) {
        let cfg = IntegratorConfig::new(64).unwrap();
        let params = init_params(seed);
        let (loss, grad) =
            loss_and_gradient(&params, &scenario, &system, 1.0, &cfg).unwrap();
        assert!(loss.is_finite());

        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed ^ 0x5eed);
        let hstep = 1e-5;
        let mut worst = 0.0f64;
        for _ in 0..n_params_checked {
            let idx = rng.gen_range(0..N_PARAMS);
            let mut v = params.to_vec();
            let mut p = params.clone();
            v[idx] += hstep;
            p.set_from_vec(&v);
            let lp = scenario_loss(&p, &scenario, &system, 1.0, &cfg).unwrap();
            v[idx] -= 2.0 * hstep;
            p.set_from_vec(&v);
            let lm = scenario_loss(&p, &scenario, &system, 1.0, &cfg).unwrap();
            let fd = (lp - lm) / (2.0 * hstep);
            let denom = fd.abs().max(grad[idx].abs()).max(1e-8);
            worst = worst.max((fd - grad[idx]).abs() / denom);
        }
        assert!(worst < 1e-4, "max relative FD error {worst}");
    }

    #[test]
    fn qubit_gradient_matches_finite_differences() {
        fd_check(System::Qubit, Scenario::new(FRAC_PI_2, 0.45, 0.0), 12, 42);
        fd_check(System::Qubit, Scenario::new(FRAC_PI_2, -0.7, 0.1), 12, 7);
    }

    #[test]
    fn qutrit_gradient_matches_finite_differences() {
        let model = QutritModel::new(-12.5, 1.37).unwrap();
        fd_check(System::Qutrit(model), Scenario::new(FRAC_PI_2, 0.3, 0.0), 10, 3);
    }

    #[test]
    fn zero_final_layer_gives_identity_loss() {
        let mut params = init_params(5);
        params.w4 = [[0.0; WIDTH]; 2];
        params.b4 = [0.0; 2];
        let cfg = IntegratorConfig::default();
        let loss = scenario_loss(
            &params,
            &Scenario::resonant(FRAC_PI_2),
            &System::Qubit,
            1.0,
            &cfg,
        )
        .unwrap();
        let expect = (1.0 - FRAC_1_SQRT_2) * (1.0 - FRAC_1_SQRT_2);
        assert!((loss - expect).abs() < 1e-12, "{loss} vs {expect}");
    }

    #[test]
    fn redistributing_duplicate_units_keeps_loss() {
        // make hidden units 3 and 7 of layer 2 compute the same activation,
        // then shift outgoing weight mass between them
        let mut p = init_params(11);
        p.w2[7] = p.w2[3];
        p.b2[7] = p.b2[3];
        let mut q = p.clone();
        for i in 0..WIDTH {
            let shift = 0.37 * q.w3[i][7];
            q.w3[i][3] += shift;
            q.w3[i][7] -= shift;
        }
        let cfg = IntegratorConfig::new(64).unwrap();
        let sc = Scenario::new(FRAC_PI_2, 0.2, 0.0);
        let lp = scenario_loss(&p, &sc, &System::Qubit, 1.0, &cfg).unwrap();
        let lq = scenario_loss(&q, &sc, &System::Qubit, 1.0, &cfg).unwrap();
        assert!((lp - lq).abs() < 1e-13);
    }

    #[test]
    fn batch_mean_of_identical_scenarios_is_single_loss() {
        let params = init_params(9);
        let cfg = IntegratorConfig::new(64).unwrap();
        let sc = Scenario::new(FRAC_PI_2, 0.6, 0.0);
        let single = scenario_loss(&params, &sc, &System::Qubit, 1.0, &cfg).unwrap();
        let (mean, _) =
            batch_loss_and_gradient(&params, &[sc; 5], &System::Qubit, 1.0, &cfg).unwrap();
        assert!((mean - single).abs() < 1e-14);
    }

    #[test]
    fn gradient_is_deterministic() {
        let params = init_params(2);
        let cfg = IntegratorConfig::new(64).unwrap();
        let scenarios: Vec<Scenario> = (0..16)
            .map(|k| Scenario::new(FRAC_PI_2, -0.8 + 0.1 * k as f64, 0.0))
            .collect();
        let (l1, g1) =
            batch_loss_and_gradient(&params, &scenarios, &System::Qubit, 1.0, &cfg).unwrap();
        let (l2, g2) =
            batch_loss_and_gradient(&params, &scenarios, &System::Qubit, 1.0, &cfg).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(g1, g2);
    }

    #[test]
    fn rejects_non_finite_params() {
        let mut params = init_params(1);
        params.b3[0] = f64::NAN;
        let cfg = IntegratorConfig::new(64).unwrap();
        assert!(scenario_loss(
            &params,
            &Scenario::resonant(FRAC_PI_2),
            &System::Qubit,
            1.0,
            &cfg
        )
        .is_err());
    }
}
