//! Pseudo-identity decay benchmark and the incoherent fidelity bound.
//!
//! Four successive `π/2` pulses compose to the identity up to a global
//! sign, so repeating the block exposes per-pulse error as decay of the
//! z-polarization. Each pulse is the ideal propagated unitary followed by
//! amplitude-damping and pure-dephasing channels.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ControlField;
use crate::integrate::{propagate_qubit, IntegratorConfig};
use crate::quantum::cvec_to_unitary;

/// Relaxation/dephasing times and the per-pulse duration, all in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub t1_s: f64,
    pub t2_s: f64,
    pub pulse_s: f64,
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t1_s > 0.0 && self.t2_s > 0.0 && self.pulse_s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise times must be positive, got T1 = {}, T2 = {}, T = {}",
                self.t1_s, self.t2_s, self.pulse_s
            )));
        }
        if self.t2_s > 2.0 * self.t1_s {
            return Err(Error::UnphysicalNoise { t2_s: self.t2_s, max_s: 2.0 * self.t1_s });
        }
        Ok(())
    }

    /// Pure-dephasing rate `1/Tφ = 1/T2 - 1/(2 T1)`.
    pub fn dephasing_rate(&self) -> f64 {
        1.0 / self.t2_s - 0.5 / self.t1_s
    }
}

/// Incoherent fidelity ceiling for a gate of length `T`:
/// `F = 1 - (T/3)(1/T1 + 1/Tφ)`.
pub fn incoherent_bound(pulse_s: f64, t1_s: f64, t2_s: f64) -> Result<f64> {
    let noise = NoiseParams { t1_s, t2_s, pulse_s };
    noise.validate()?;
    Ok(1.0 - pulse_s / 3.0 * (1.0 / t1_s + noise.dephasing_rate()))
}

/// z-polarization after each 4-pulse block, with the fitted per-pulse
/// fidelity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayTrace {
    pub n: Vec<usize>,
    pub z: Vec<f64>,
    /// Fitted per-block decay factor of `z(n) = A rⁿ`.
    pub decay_per_block: f64,
    /// Per-pulse average fidelity `1 - (1 - r)/6`: the block decay is read
    /// as a per-block process infidelity over four pulses and converted to
    /// an average-fidelity error.
    pub fidelity: f64,
    pub fidelity_sigma: f64,
}

type Rho = [[C64; 2]; 2];

fn apply_noise(rho: &mut Rho, gamma: f64, eta: f64) {
    // amplitude damping toward |0⟩ then pure dephasing
    let p1 = rho[1][1].re;
    rho[0][0] += C64::new(gamma * p1, 0.0);
    rho[1][1] = C64::new((1.0 - gamma) * p1, 0.0);
    let coh = (1.0 - gamma).sqrt() * eta;
    rho[0][1] *= coh;
    rho[1][0] *= coh;
}

/// Least-squares fit of `z(n) = A rⁿ`: log-linear seed on the early
/// positive samples, then Gauss-Newton. Returns `(a, r, sigma_r)`.
fn fit_exponential(ns: &[usize], zs: &[f64]) -> (f64, f64, f64) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&n, &z) in ns.iter().zip(zs) {
        if z > 1e-3 {
            xs.push(n as f64);
            ys.push(z.ln());
        } else {
            break;
        }
    }
    let (mut a, mut r) = if xs.len() >= 2 {
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() < 1e-30 {
            (zs[0], 1.0)
        } else {
            let slope = (n * sxy - sx * sy) / denom;
            let intercept = (sy - slope * sx) / n;
            (intercept.exp(), slope.exp())
        }
    } else {
        (1.0, 0.5)
    };

    for _ in 0..60 {
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for (&n, &z) in ns.iter().zip(zs) {
            let nf = n as f64;
            let rn = r.powf(nf);
            let resid = a * rn - z;
            let ja = rn;
            let jr = if nf > 0.0 { a * nf * r.powf(nf - 1.0) } else { 0.0 };
            jtj[0][0] += ja * ja;
            jtj[0][1] += ja * jr;
            jtj[1][1] += jr * jr;
            jtr[0] += ja * resid;
            jtr[1] += jr * resid;
        }
        jtj[1][0] = jtj[0][1];
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        if det.abs() < 1e-30 {
            break;
        }
        let da = (jtj[1][1] * jtr[0] - jtj[0][1] * jtr[1]) / det;
        let dr = (-jtj[1][0] * jtr[0] + jtj[0][0] * jtr[1]) / det;
        a -= da;
        r -= dr;
        if da.abs().max(dr.abs()) < 1e-15 {
            break;
        }
    }

    // standard error of r from the linearized fit
    let n_pts = ns.len() as f64;
    let mut ssr = 0.0;
    let mut jtj = [[0.0f64; 2]; 2];
    for (&n, &z) in ns.iter().zip(zs) {
        let nf = n as f64;
        let rn = r.powf(nf);
        let resid = a * rn - z;
        ssr += resid * resid;
        let ja = rn;
        let jr = if nf > 0.0 { a * nf * r.powf(nf - 1.0) } else { 0.0 };
        jtj[0][0] += ja * ja;
        jtj[0][1] += ja * jr;
        jtj[1][1] += jr * jr;
    }
    jtj[1][0] = jtj[0][1];
    let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
    let sigma_r = if n_pts > 2.0 && det > 1e-30 {
        let var = ssr / (n_pts - 2.0);
        (var * jtj[0][0] / det).sqrt()
    } else {
        0.0
    };
    (a, r, sigma_r)
}

/// Density-matrix simulation of the repeated 4-pulse pseudo-identity.
///
/// `shots` switches the z readout from exact expectations to binomial
/// sampling (seeded, for fit-uncertainty studies).
pub fn pseudo_identity_decay<F: ControlField>(
    field: &F,
    n_max: usize,
    noise: &NoiseParams,
    cfg: &IntegratorConfig,
    shots: Option<(u64, u64)>,
) -> Result<DecayTrace> {
    noise.validate()?;
    if n_max < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 blocks to expose the decay, got {n_max}"
        )));
    }
    let c = propagate_qubit(field, cfg)?.final_state().normalized();
    let u = cvec_to_unitary(&c)?;

    let gamma = 1.0 - (-noise.pulse_s / noise.t1_s).exp();
    let eta = (-noise.pulse_s * noise.dephasing_rate()).exp();

    let mut rho: Rho = [
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
    ];
    let mut rng = shots.map(|(_, seed)| ChaCha12Rng::seed_from_u64(seed));
    let mut ns = Vec::with_capacity(n_max);
    let mut zs = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        for _ in 0..4 {
            rho = u.conjugate_density(&rho);
            apply_noise(&mut rho, gamma, eta);
        }
        let z = rho[0][0].re - rho[1][1].re;
        let z = match (shots, rng.as_mut()) {
            (Some((count, _)), Some(rng)) => {
                let p = (0.5 * (1.0 + z)).clamp(0.0, 1.0);
                let k = Binomial::new(count, p).expect("valid p").sample(rng);
                2.0 * k as f64 / count as f64 - 1.0
            }
            _ => z,
        };
        ns.push(n);
        zs.push(z);
    }

    let (_, r, sigma_r) = fit_exponential(&ns, &zs);
    Ok(DecayTrace {
        n: ns,
        z: zs,
        decay_per_block: r,
        fidelity: 1.0 - (1.0 - r) / 6.0,
        fidelity_sigma: sigma_r / 6.0,
    })
}
