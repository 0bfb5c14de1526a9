//! Simulated quantum process tomography.
//!
//! Four input states (`|0⟩`, `|x⟩`, `|y⟩`, `|1⟩`) are prepared with ideal
//! unitaries, the pulse under test is applied, and the x, y, z Bloch
//! components of the output are recorded (x and y via the usual `π/2`
//! readout pre-rotations, which the exact expectation values reproduce).
//! On the qutrit the preparation and readout act on the qubit block only,
//! which is tomography in the qubit subspace: leakage shows up as a loss of
//! purity of the reconstructed process.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{ControlField, Perturbed};
use crate::integrate::{propagate_qubit, propagate_qutrit, IntegratorConfig};
use crate::net::Scenario;
use crate::quantum::{cvec_to_unitary, System};

/// Measured expectation values: rows are the inputs `|0⟩, |x⟩, |y⟩, |1⟩`,
/// columns the readout axes x, y, z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QptDataset {
    pub values: [[f64; 3]; 4],
}

/// Measurement model: exact expectation values by default, binomial shot
/// sampling when `shots` is set.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct QptOptions {
    pub shots: Option<u64>,
    pub seed: u64,
}

/// Bloch vectors of the prepared inputs, in row order.
const INPUT_BLOCH: [[f64; 3]; 4] = [
    [0.0, 0.0, 1.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, -1.0],
];

fn density2(r: [f64; 3]) -> [[C64; 2]; 2] {
    [
        [
            C64::new(0.5 * (1.0 + r[2]), 0.0),
            C64::new(0.5 * r[0], -0.5 * r[1]),
        ],
        [
            C64::new(0.5 * r[0], 0.5 * r[1]),
            C64::new(0.5 * (1.0 - r[2]), 0.0),
        ],
    ]
}

/// Run tomography on the pulse defined by `field` under the given scenario.
pub fn simulate_qpt<F: ControlField>(
    field: &F,
    scenario: &Scenario,
    system: &System,
    cfg: &IntegratorConfig,
    opts: &QptOptions,
) -> Result<QptDataset> {
    let perturbed = Perturbed::new(field, scenario.alpha, scenario.delta);
    let mut values = [[0.0; 3]; 4];
    match system {
        System::Qubit => {
            let c = propagate_qubit(&perturbed, cfg)?.final_state().normalized();
            let u = cvec_to_unitary(&c)?;
            for (row, bloch) in values.iter_mut().zip(INPUT_BLOCH) {
                let rho = u.conjugate_density(&density2(bloch));
                row[0] = 2.0 * rho[0][1].re;
                row[1] = -2.0 * rho[0][1].im;
                row[2] = rho[0][0].re - rho[1][1].re;
            }
        }
        System::Qutrit(model) => {
            let u = propagate_qutrit(&perturbed, model, cfg)?.final_state();
            for (row, bloch) in values.iter_mut().zip(INPUT_BLOCH) {
                let q = density2(bloch);
                let mut rho3 = [[C64::new(0.0, 0.0); 3]; 3];
                for i in 0..2 {
                    for j in 0..2 {
                        rho3[i][j] = q[i][j];
                    }
                }
                let out = u.conjugate_density(&rho3);
                row[0] = 2.0 * out[0][1].re;
                row[1] = -2.0 * out[0][1].im;
                row[2] = out[0][0].re - out[1][1].re;
            }
        }
    }
    if let Some(shots) = opts.shots {
        let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
        for row in values.iter_mut() {
            for v in row.iter_mut() {
                let p = (0.5 * (1.0 + *v)).clamp(0.0, 1.0);
                let k = Binomial::new(shots, p).expect("valid p").sample(&mut rng);
                *v = 2.0 * k as f64 / shots as f64 - 1.0;
            }
        }
    }
    Ok(QptDataset { values })
}
