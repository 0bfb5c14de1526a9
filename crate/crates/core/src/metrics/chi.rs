//! Process matrices in the `{σ0, σx, -iσy, σz}` basis: construction from
//! measured expectation values, the rank-1 form of a unitary, the nearest
//! unitary fit, and the vertical-plane `π/2` process fidelity.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::quantum::CVec4;

use super::qpt::QptDataset;

/// 4x4 complex process matrix in the basis `{σ0, σx, -iσy, σz}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiMatrix(pub [[C64; 4]; 4]);

impl ChiMatrix {
    pub fn zero() -> Self {
        Self([[C64::new(0.0, 0.0); 4]; 4])
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|k| self.0[k][k]).sum()
    }

    pub fn hermitian_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        d
    }

    pub fn hermitian_part(&self) -> Self {
        let mut h = [[C64::new(0.0, 0.0); 4]; 4];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = 0.5 * (self.0[i][j] + self.0[j][i].conj());
            }
        }
        Self(h)
    }

    /// `tr(χ²)`, real for Hermitian input.
    pub fn purity(&self) -> f64 {
        let mut p = C64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                p += self.0[i][j] * self.0[j][i];
            }
        }
        p.re
    }
}

/// Basis coefficients of a unitary process: `b = (c0, -i cx, cy, -i cz)`.
fn bvec(c: &CVec4) -> [C64; 4] {
    [
        C64::new(c.c0, 0.0),
        C64::new(0.0, -c.cx),
        C64::new(c.cy, 0.0),
        C64::new(0.0, -c.cz),
    ]
}

/// Rank-1 process matrix `χ = b b†` of the unitary with coefficients `c`.
pub fn chi_from_cvec(c: &CVec4) -> ChiMatrix {
    debug_assert!((c.norm() - 1.0).abs() < 1e-6);
    let b = bvec(c);
    let mut chi = [[C64::new(0.0, 0.0); 4]; 4];
    for (j, row) in chi.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = b[j] * b[k].conj();
        }
    }
    ChiMatrix(chi)
}

type C2 = [[C64; 2]; 2];

fn density_from_bloch(r: [f64; 3]) -> C2 {
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

/// Linear-inversion reconstruction of χ from the four prepared inputs and
/// three measured axes (the standard single-qubit construction; the chosen
/// operator basis makes the result land directly in `{σ0, σx, -iσy, σz}`).
pub fn reconstruct_chi(data: &QptDataset) -> Result<ChiMatrix> {
    for (i, row) in data.values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() || v.abs() > 1.0 + 1e-9 {
                return Err(Error::BadDataset(format!(
                    "expectation value [{i}][{j}] = {v} outside [-1, 1]"
                )));
            }
        }
    }
    // output density matrices for inputs |0⟩, |x⟩, |y⟩, |1⟩
    let e0 = density_from_bloch(data.values[0]);
    let ex = density_from_bloch(data.values[1]);
    let ey = density_from_bloch(data.values[2]);
    let e1 = density_from_bloch(data.values[3]);

    // E(|0⟩⟨1|) and E(|1⟩⟨0|) by linearity
    let mut rho2 = [[C64::new(0.0, 0.0); 2]; 2];
    let mut rho3 = [[C64::new(0.0, 0.0); 2]; 2];
    let ip = C64::new(0.0, 1.0);
    for i in 0..2 {
        for j in 0..2 {
            let sum01 = e0[i][j] + e1[i][j];
            rho2[i][j] = ex[i][j] + ip * ey[i][j] - 0.5 * (C64::new(1.0, 1.0)) * sum01;
            rho3[i][j] = ex[i][j] - ip * ey[i][j] - 0.5 * (C64::new(1.0, -1.0)) * sum01;
        }
    }

    // block matrix [[E(ρ1), E(ρ2)], [E(ρ3), E(ρ4)]] sandwiched by
    // Λ = (1/2) [[I, X], [X, -I]]
    let mut block = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            block[i][j] = e0[i][j];
            block[i][j + 2] = rho2[i][j];
            block[i + 2][j] = rho3[i][j];
            block[i + 2][j + 2] = e1[i][j];
        }
    }
    let half = C64::new(0.5, 0.0);
    let lam: [[C64; 4]; 4] = [
        [half, C64::new(0.0, 0.0), C64::new(0.0, 0.0), half],
        [C64::new(0.0, 0.0), half, half, C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), half, -half, C64::new(0.0, 0.0)],
        [half, C64::new(0.0, 0.0), C64::new(0.0, 0.0), -half],
    ];
    let mul = |a: &[[C64; 4]; 4], b: &[[C64; 4]; 4]| {
        let mut out = [[C64::new(0.0, 0.0); 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        out
    };
    let chi = mul(&lam, &mul(&block, &lam));
    Ok(ChiMatrix(chi))
}

/// Eigen-decomposition of a real symmetric 4x4 matrix by cyclic Jacobi
/// rotations. Returns eigenvalues (descending) and matching eigenvectors
/// as rows.
fn sym4_eigen(mut a: [[f64; 4]; 4]) -> ([f64; 4], [[f64; 4]; 4]) {
    let mut v = [[0.0; 4]; 4];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for i in 0..4 {
            for j in (i + 1)..4 {
                off = off.max(a[i][j].abs());
            }
        }
        if off < 1e-15 {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                if a[p][q].abs() < 1e-18 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..4 {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..4 {
                    let (vkp, vkq) = (v[p][k], v[q][k]);
                    v[p][k] = c * vkp - s * vkq;
                    v[q][k] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let mut vals = [0.0; 4];
    let mut vecs = [[0.0; 4]; 4];
    for (k, &idx) in order.iter().enumerate() {
        vals[k] = a[idx][idx];
        vecs[k] = v[idx];
    }
    (vals, vecs)
}

/// Real symmetric quadratic form of the unitary-structure projection:
/// `G_jk = Re(conj(D_j) H_jk D_k)` with `D = diag(1, -i, 1, -i)`, so that
/// `b(c)† H b(c) = cᵀ G c` for real `c`.
fn structure_form(h: &ChiMatrix) -> [[f64; 4]; 4] {
    let d = [
        C64::new(1.0, 0.0),
        C64::new(0.0, -1.0),
        C64::new(1.0, 0.0),
        C64::new(0.0, -1.0),
    ];
    let mut g = [[0.0; 4]; 4];
    for (j, row) in g.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = (d[j].conj() * h.0[j][k] * d[k]).re;
        }
    }
    g
}

#[derive(Clone, Copy, Debug)]
pub struct UnitaryFit {
    pub c: CVec4,
    /// Gap between the two leading eigenvalues of the structure form; the
    /// fit is flagged when it closes.
    pub gap: f64,
    pub degenerate: bool,
}

/// Closest unitary (Frobenius norm on process matrices) to a Hermitian χ.
///
/// Over the admissible rank-1 matrices `χ_fit = b(c) b(c)†` the Frobenius
/// objective reduces to maximizing `cᵀ G c` over unit real `c`, so the
/// minimizer is the leading eigenvector of the structure form `G`. The sign
/// is fixed to `c0 >= 0` (tie-break `cx >= 0`).
pub fn fit_unitary(chi: &ChiMatrix) -> UnitaryFit {
    let g = structure_form(&chi.hermitian_part());
    let (vals, vecs) = sym4_eigen(g);
    let gap = vals[0] - vals[1];
    let mut c = CVec4::new(vecs[0][0], vecs[0][1], vecs[0][2], vecs[0][3]).normalized();
    if c.c0 < 0.0 || (c.c0.abs() < 1e-12 && c.cx < 0.0) {
        c = CVec4::new(-c.c0, -c.cx, -c.cy, -c.cz);
    }
    UnitaryFit { c, gap, degenerate: gap < 1e-9 }
}

/// Real roots of a real-coefficient polynomial (ascending coefficients) via
/// Durand-Kerner iteration.
fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let mut c: Vec<f64> = coeffs.iter().map(|x| x / scale).collect();
    while c.len() > 1 && c.last().unwrap().abs() < 1e-13 {
        c.pop();
    }
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let lead = *c.last().unwrap();
    let monic: Vec<f64> = c.iter().map(|x| x / lead).collect();
    let eval = |z: C64| -> C64 {
        let mut p = C64::new(0.0, 0.0);
        for &a in monic.iter().rev() {
            p = p * z + a;
        }
        p
    };
    let mut roots: Vec<C64> = (0..deg)
        .map(|k| C64::from_polar(1.3, 0.7 + 2.0 * std::f64::consts::PI * k as f64 / deg as f64))
        .collect();
    for _ in 0..200 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 {
                continue;
            }
            let delta = eval(roots[i]) / denom;
            roots[i] -= delta;
            moved = moved.max(delta.norm());
        }
        if moved < 1e-14 {
            break;
        }
    }
    roots
        .into_iter()
        .filter(|z| z.im.abs() < 1e-7 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect()
}

/// Process fidelity of a (purified) χ against the nearest vertical-plane
/// `π/2` rotation, maximized over the plane angle Θ. Returns `(F, Θ)`.
///
/// `F(Θ)` is a two-harmonic trigonometric polynomial; its stationary points
/// are the real roots of a quartic in `tan(Θ/2)`, solved in closed form and
/// polished by Newton steps.
pub fn fidelity_chi(chi: &ChiMatrix) -> (f64, f64) {
    let h = chi.hermitian_part();
    let purity = h.purity();
    assert!(purity > 0.0, "fidelity_chi needs tr(χ²) > 0");
    let norm = purity.sqrt();
    let mut tilde = h;
    for row in tilde.0.iter_mut() {
        for v in row.iter_mut() {
            *v /= norm;
        }
    }
    let g = structure_form(&tilde);

    // F(Θ) = K + v cosΘ + w sinΘ + p cos2Θ + q sin2Θ
    let kk = 0.5 * g[0][0] + 0.25 * (g[1][1] + g[2][2]);
    let v = g[0][1];
    let w = g[0][2];
    let p = 0.25 * (g[1][1] - g[2][2]);
    let q = 0.5 * g[1][2];
    let f = |theta: f64| {
        kk + v * theta.cos() + w * theta.sin() + p * (2.0 * theta).cos() + q * (2.0 * theta).sin()
    };

    if v.abs().max(w.abs()).max(p.abs()).max(q.abs()) < 1e-15 {
        return (kk, 0.0);
    }

    // stationary points: quartic in u = tan(Θ/2)
    let coeffs = [
        w + 2.0 * q,
        -2.0 * v - 8.0 * p,
        -12.0 * q,
        -2.0 * v + 8.0 * p,
        -w + 2.0 * q,
    ];
    let mut candidates: Vec<f64> = real_roots(&coeffs)
        .into_iter()
        .map(|u| 2.0 * u.atan())
        .collect();
    candidates.push(std::f64::consts::PI); // u -> ±inf
    let df = |t: f64| {
        -v * t.sin() + w * t.cos() - 2.0 * p * (2.0 * t).sin() + 2.0 * q * (2.0 * t).cos()
    };
    let ddf = |t: f64| {
        -v * t.cos() - w * t.sin() - 4.0 * p * (2.0 * t).cos() - 4.0 * q * (2.0 * t).sin()
    };
    let mut best = (f64::NEG_INFINITY, 0.0);
    for mut theta in candidates {
        for _ in 0..8 {
            let d2 = ddf(theta);
            if d2.abs() < 1e-18 {
                break;
            }
            theta -= df(theta) / d2;
        }
        let val = f(theta);
        if val > best.0 {
            best = (val, (theta + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn random_unit_c(rng: &mut ChaCha12Rng) -> CVec4 {
        loop {
            let c = CVec4::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if c.norm() > 1e-2 {
                return c.normalized();
            }
        }
    }

    #[test]
    fn chi_of_identity_is_e00() {
        let chi = chi_from_cvec(&CVec4::IDENTITY);
        assert!((chi.0[0][0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        for i in 0..4 {
            for j in 0..4 {
                if (i, j) != (0, 0) {
                    assert!(chi.0[i][j].norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn chi_is_rank_one_and_pure() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..50 {
            let c = random_unit_c(&mut rng);
            let chi = chi_from_cvec(&c);
            assert!((chi.trace().re - 1.0).abs() < 1e-12);
            assert!(chi.trace().im.abs() < 1e-15);
            assert!((chi.purity() - 1.0).abs() < 1e-12);
            assert!(chi.hermitian_defect() < 1e-15);
        }
    }

    #[test]
    fn chi_of_half_pi_x() {
        let c = CVec4::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0);
        let chi = chi_from_cvec(&c);
        assert!((chi.0[0][0].re - 0.5).abs() < 1e-15);
        assert!((chi.0[1][1].re - 0.5).abs() < 1e-15);
        // b0 b1* = (1/√2)(+i/√2) = i/2
        assert!((chi.0[0][1] - C64::new(0.0, 0.5)).norm() < 1e-15);
        assert!((chi.0[1][0] - C64::new(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn fit_unitary_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..200 {
            let mut c = random_unit_c(&mut rng);
            if c.c0 < 0.0 {
                c = CVec4::new(-c.c0, -c.cx, -c.cy, -c.cz);
            }
            let fit = fit_unitary(&chi_from_cvec(&c));
            assert!(!fit.degenerate);
            let err = (fit.c.c0 - c.c0)
                .abs()
                .max((fit.c.cx - c.cx).abs())
                .max((fit.c.cy - c.cy).abs())
                .max((fit.c.cz - c.cz).abs());
            assert!(err < 1e-10, "fit error {err}");
        }
    }

    #[test]
    fn fit_unitary_flags_maximally_mixed() {
        let mut chi = ChiMatrix::zero();
        for k in 0..4 {
            chi.0[k][k] = C64::new(0.25, 0.0);
        }
        let fit = fit_unitary(&chi);
        assert!(fit.degenerate);
    }

    #[test]
    fn fit_unitary_recovers_under_depolarizing_noise() {
        // χ = 0.95 χ_u + 0.05 χ_depol(s=0): recovery within 0.02
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..40 {
            let mut c = random_unit_c(&mut rng);
            if c.c0 < 0.0 {
                c = CVec4::new(-c.c0, -c.cx, -c.cy, -c.cz);
            }
            let mut chi = chi_from_cvec(&c);
            for i in 0..4 {
                for j in 0..4 {
                    chi.0[i][j] *= 0.95;
                }
                chi.0[i][i] += C64::new(0.05 * 0.25, 0.0);
            }
            let fit = fit_unitary(&chi);
            for (a, b) in [
                (fit.c.c0, c.c0),
                (fit.c.cx, c.cx),
                (fit.c.cy, c.cy),
                (fit.c.cz, c.cz),
            ] {
                assert!((a - b).abs() < 0.02, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn fit_unitary_matches_direct_minimization() {
        // cross-check the eigenvector route against a dense direct search of
        // the Frobenius objective over unit c-vectors
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..5 {
            // noisy non-rank-1 Hermitian test matrix
            let base = random_unit_c(&mut rng);
            let mut chi = chi_from_cvec(&base);
            for i in 0..4 {
                for j in i..4 {
                    let n = C64::new(rng.gen_range(-0.03..0.03), rng.gen_range(-0.03..0.03));
                    chi.0[i][j] += n;
                    if i != j {
                        chi.0[j][i] += n.conj();
                    } else {
                        chi.0[i][i] = C64::new(chi.0[i][i].re, 0.0);
                    }
                }
            }
            let fit = fit_unitary(&chi);

            let frobenius = |c: &CVec4| -> f64 {
                let cf = chi_from_cvec(c);
                let mut d = 0.0;
                for i in 0..4 {
                    for j in 0..4 {
                        d += (chi.hermitian_part().0[i][j] - cf.0[i][j]).norm_sqr();
                    }
                }
                d
            };
            // local refinement from many random starts
            let mut best = (f64::INFINITY, CVec4::IDENTITY);
            for _ in 0..300 {
                let mut c = random_unit_c(&mut rng);
                let mut fval = frobenius(&c);
                let mut step = 0.1;
                while step > 1e-8 {
                    let mut improved = false;
                    for dim in 0..4 {
                        for sgn in [1.0, -1.0] {
                            let mut arr = c.to_array();
                            arr[dim] += sgn * step;
                            let cand = CVec4::from_array(arr).normalized();
                            let v = frobenius(&cand);
                            if v < fval {
                                fval = v;
                                c = cand;
                                improved = true;
                            }
                        }
                    }
                    if !improved {
                        step *= 0.5;
                    }
                }
                if fval < best.0 {
                    best = (fval, c);
                }
            }
            let direct = frobenius(&fit.c);
            assert!(
                direct <= best.0 + 1e-6,
                "eigen route {direct} vs direct search {}",
                best.0
            );
        }
    }

    #[test]
    fn fidelity_of_exact_half_pi_is_one() {
        let c = CVec4::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0);
        let (f, theta) = fidelity_chi(&chi_from_cvec(&c));
        assert!((f - 1.0).abs() < 1e-12);
        assert!(theta.abs() < 1e-6);
    }

    #[test]
    fn fidelity_of_identity_is_half() {
        let (f, _) = fidelity_chi(&chi_from_cvec(&CVec4::IDENTITY));
        assert!((f - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fidelity_invariant_under_plane_rotation() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..20 {
            let c = random_unit_c(&mut rng);
            let (f0, _) = fidelity_chi(&chi_from_cvec(&c));
            let (f1, _) = fidelity_chi(&chi_from_cvec(&c.rotate_xy(rng.gen_range(-3.0..3.0))));
            assert!((f0 - f1).abs() < 1e-10);
        }
    }

    #[test]
    fn fidelity_closed_form_matches_grid_search() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        for case in 0..60 {
            // mix of rank-1 and noisy Hermitian inputs
            let base = random_unit_c(&mut rng);
            let mut chi = chi_from_cvec(&base);
            if case % 2 == 1 {
                for i in 0..4 {
                    for j in i..4 {
                        let n =
                            C64::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
                        chi.0[i][j] += n;
                        if i != j {
                            chi.0[j][i] += n.conj();
                        } else {
                            chi.0[i][i] = C64::new(chi.0[i][i].re, 0.0);
                        }
                    }
                }
            }
            let (f_closed, _) = fidelity_chi(&chi);

            // dense grid bracketing plus golden-section refinement
            let h = chi.hermitian_part();
            let norm = h.purity().sqrt();
            let g = structure_form(&h);
            let f = |theta: f64| {
                let ct = [
                    FRAC_1_SQRT_2,
                    theta.cos() * FRAC_1_SQRT_2,
                    theta.sin() * FRAC_1_SQRT_2,
                    0.0,
                ];
                let mut val = 0.0;
                for i in 0..4 {
                    for j in 0..4 {
                        val += ct[i] * g[i][j] * ct[j];
                    }
                }
                val / norm
            };
            let n = 3601;
            let mut best_k = 0;
            let mut best_v = f64::NEG_INFINITY;
            for k in 0..n {
                let theta = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let v = f(theta);
                if v > best_v {
                    best_v = v;
                    best_k = k;
                }
            }
            let step = 2.0 * std::f64::consts::PI / n as f64;
            let center = -std::f64::consts::PI + step * best_k as f64;
            let (mut lo, mut hi) = (center - step, center + step);
            let phi = (5.0f64.sqrt() - 1.0) / 2.0;
            let (mut x1, mut x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
            let (mut f1, mut f2) = (f(x1), f(x2));
            for _ in 0..80 {
                if f1 > f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - phi * (hi - lo);
                    f1 = f(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + phi * (hi - lo);
                    f2 = f(x2);
                }
            }
            let f_grid = f(0.5 * (lo + hi));
            assert!(
                (f_closed - f_grid).abs() < 1e-9,
                "closed form {f_closed} vs grid {f_grid}"
            );
        }
    }

    #[test]
    fn jacobi_eigen_reconstructs() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut a = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in i..4 {
                    let v: f64 = rng.gen_range(-2.0..2.0);
                    a[i][j] = v;
                    a[j][i] = v;
                }
            }
            let (vals, vecs) = sym4_eigen(a);
            assert!(vals.windows(2).all(|w| w[0] >= w[1] - 1e-12));
            for (k, vec) in vecs.iter().enumerate() {
                // A v = λ v and orthonormality
                for i in 0..4 {
                    let av: f64 = (0..4).map(|j| a[i][j] * vec[j]).sum();
                    assert!((av - vals[k] * vec[i]).abs() < 1e-10);
                }
                for (l, other) in vecs.iter().enumerate() {
                    let dot: f64 = (0..4).map(|j| vec[j] * other[j]).sum();
                    let expect = if k == l { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn quartic_roots_match_known() {
        // (u-1)(u+2)(u-3)(u+0.5) = u⁴ - 1.5u³ - 6.5u² + 7.5u + 3... expand:
        let expand = |roots: &[f64]| {
            let mut c = vec![1.0];
            for &r in roots {
                let mut next = vec![0.0; c.len() + 1];
                for (i, &ci) in c.iter().enumerate() {
                    next[i + 1] += ci;
                    next[i] -= r * ci;
                }
                c = next;
            }
            c
        };
        let truth = [1.0, -2.0, 3.0, -0.5];
        let coeffs = expand(&truth);
        let mut found = real_roots(&coeffs);
        found.sort_by(f64::total_cmp);
        let mut expected = truth.to_vec();
        expected.sort_by(f64::total_cmp);
        assert_eq!(found.len(), 4);
        for (a, b) in found.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}
