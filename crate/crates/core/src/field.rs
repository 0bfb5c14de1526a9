//! Control fields: complex drive amplitudes as functions of normalized time.
//!
//! A [`ControlField`] is defined on the training window `t ∈ [-π, π]`. Fields
//! report their interior discontinuities through [`ControlField::breakpoints`]
//! so the integrator can align step boundaries with them.

use num_complex::Complex64 as C64;

/// Time window the dynamics are integrated over.
pub const T_START: f64 = -std::f64::consts::PI;
pub const T_END: f64 = std::f64::consts::PI;

pub trait ControlField: Sync {
    /// Complex drive amplitude at time `t`, in units of `Ω_2π`.
    fn value(&self, t: f64) -> C64;

    /// Interior discontinuity locations, sorted, strictly inside the window.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<F: ControlField + ?Sized> ControlField for &F {
    fn value(&self, t: f64) -> C64 {
        (**self).value(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

/// Field defined by a closure.
pub struct FnField<F: Fn(f64) -> C64 + Sync>(pub F);

impl<F: Fn(f64) -> C64 + Sync> ControlField for FnField<F> {
    fn value(&self, t: f64) -> C64 {
        (self.0)(t)
    }
}

/// The zero field.
pub struct ZeroField;

impl ControlField for ZeroField {
    fn value(&self, _t: f64) -> C64 {
        C64::new(0.0, 0.0)
    }
}

/// Pointwise complex conjugate of a field: `A e^{iφ} -> A e^{-iφ}`.
///
/// On the pure qubit, playing the conjugated field at detuning `-δ`
/// reproduces the original field's c-vector at `+δ` with `cy` and `cz`
/// negated.
pub struct Conjugated<F>(pub F);

impl<F: ControlField> ControlField for Conjugated<F> {
    fn value(&self, t: f64) -> C64 {
        self.0.value(t).conj()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.0.breakpoints()
    }
}

pub fn conjugate_field<F: ControlField>(field: F) -> Conjugated<F> {
    Conjugated(field)
}

/// Perturbation wrapper: `(1 + α) f(t) e^{iδt}`.
pub struct Perturbed<F> {
    pub field: F,
    pub alpha: f64,
    pub delta: f64,
}

impl<F: ControlField> Perturbed<F> {
    pub fn new(field: F, alpha: f64, delta: f64) -> Self {
        Self { field, alpha, delta }
    }

    /// Detuning-only perturbation.
    pub fn detuned(field: F, delta: f64) -> Self {
        Self::new(field, 0.0, delta)
    }
}

impl<F: ControlField> ControlField for Perturbed<F> {
    fn value(&self, t: f64) -> C64 {
        (1.0 + self.alpha) * self.field.value(t) * C64::from_polar(1.0, self.delta * t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.field.breakpoints()
    }
}

/// Field reconstructed from uniform complex samples over `[-π, π]`
/// (inclusive endpoints), interpolated with a centered 4-point Lagrange
/// cubic.
#[derive(Clone, Debug)]
pub struct SampledField {
    samples: Vec<C64>,
}

impl SampledField {
    /// `samples[k]` is the value at `t = -π + k * 2π/(n-1)`.
    pub fn new(samples: Vec<C64>) -> crate::Result<Self> {
        if samples.len() < 4 {
            return Err(crate::Error::WaveformTooShort { len: samples.len(), min: 4 });
        }
        if let Some(k) = samples.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            let n = samples.len();
            let t = T_START + (T_END - T_START) * k as f64 / (n - 1) as f64;
            return Err(crate::Error::NonFiniteField { t });
        }
        Ok(Self { samples })
    }

    /// Sample a field on the uniform inclusive grid.
    pub fn from_field<F: ControlField>(field: &F, n: usize) -> crate::Result<Self> {
        let step = (T_END - T_START) / (n - 1) as f64;
        Self::new((0..n).map(|k| field.value(T_START + k as f64 * step)).collect())
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }
}

impl ControlField for SampledField {
    fn value(&self, t: f64) -> C64 {
        let n = self.samples.len();
        let x = (t - T_START) / (T_END - T_START) * (n - 1) as f64;
        let x = x.clamp(0.0, (n - 1) as f64);
        let seg = (x.floor() as usize).min(n - 2);
        // 4-point stencil, shifted inward at the ends
        let s = seg.saturating_sub(1).min(n - 4);
        let u = x - s as f64;
        let mut out = C64::new(0.0, 0.0);
        for k in 0..4 {
            let mut w = 1.0;
            for m in 0..4 {
                if m != k {
                    w *= (u - m as f64) / (k as f64 - m as f64);
                }
            }
            out += w * self.samples[s + k];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_of_real_field_is_identity() {
        let f = FnField(|t: f64| C64::new(t.cos(), 0.0));
        let g = conjugate_field(&f);
        for k in 0..20 {
            let t = T_START + 0.3 * k as f64;
            if t > T_END {
                break;
            }
            assert_eq!(f.value(t), g.value(t));
        }
    }

    #[test]
    fn double_conjugation_is_identity() {
        let f = FnField(|t: f64| C64::new(t.cos(), t.sin()));
        let g = conjugate_field(conjugate_field(&f));
        for k in 0..10 {
            let t = -3.0 + 0.61 * k as f64;
            assert_eq!(f.value(t), g.value(t));
        }
    }

    #[test]
    fn perturbation_separability() {
        let f = FnField(|t: f64| C64::new((2.0 * t).cos(), 0.3 * t));
        let p = Perturbed::new(&f, 0.25, 0.7);
        for k in 0..32 {
            let t = T_START + (T_END - T_START) * k as f64 / 31.0;
            let expect = 1.25 * f.value(t) * C64::from_polar(1.0, 0.7 * t);
            assert!((p.value(t) - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn sampled_field_reproduces_smooth_signal() {
        let f = FnField(|t: f64| C64::new((0.9 * t).sin(), (0.4 * t).cos()));
        let s = SampledField::from_field(&f, 257).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..1000 {
            let t = T_START + (T_END - T_START) * k as f64 / 999.0;
            worst = worst.max((s.value(t) - f.value(t)).norm());
        }
        assert!(worst < 1e-6, "interpolation error {worst}");
    }

    #[test]
    fn sampled_field_rejects_bad_input() {
        assert!(SampledField::new(vec![C64::new(0.0, 0.0); 3]).is_err());
        let mut v = vec![C64::new(0.0, 0.0); 32];
        v[10] = C64::new(f64::NAN, 0.0);
        assert!(matches!(
            SampledField::new(v),
            Err(crate::Error::NonFiniteField { .. })
        ));
    }
}
