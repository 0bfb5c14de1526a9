//! Materialize a [`PulseSpec`](crate::config::PulseSpec) into a concrete
//! control field.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;

use pulse_core::baselines::{
    calibrate_drag, composite_field, drag_pulse, optimize_composite, rectangular_pulse,
    CompositeField, CompositeSequence, DragPulse, RectPulse, Window,
};
use pulse_core::field::ControlField;
use pulse_core::integrate::IntegratorConfig;
use pulse_core::net::{load_checkpoint, NetworkParams};
use pulse_core::quantum::System;

use crate::config::PulseSpec;
use crate::{CliError, CliResult};

pub enum LoadedPulse {
    Net(NetworkParams),
    Rect(RectPulse),
    Drag(DragPulse),
    Composite(Box<CompositeSequence>, CompositeField),
}

impl ControlField for LoadedPulse {
    fn value(&self, t: f64) -> C64 {
        match self {
            LoadedPulse::Net(p) => {
                let (a, phi) = p.amplitude_phase(t, FRAC_PI_2);
                a * C64::from_polar(1.0, phi)
            }
            LoadedPulse::Rect(p) => p.value(t),
            LoadedPulse::Drag(p) => p.value(t),
            LoadedPulse::Composite(_, f) => f.value(t),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            LoadedPulse::Composite(_, f) => f.breakpoints(),
            _ => Vec::new(),
        }
    }
}

impl LoadedPulse {
    pub fn kind(&self) -> &'static str {
        match self {
            LoadedPulse::Net(_) => "checkpoint",
            LoadedPulse::Rect(_) => "rect",
            LoadedPulse::Drag(_) => "drag",
            LoadedPulse::Composite(..) => "composite",
        }
    }
}

/// Resolve a pulse spec; DRAG calibration and composite optimization need
/// the system and integrator settings.
pub fn load_pulse(
    spec: &PulseSpec,
    system: &System,
    n_steps: usize,
    seed_override: Option<u64>,
) -> CliResult<LoadedPulse> {
    match spec {
        PulseSpec::Checkpoint { path } => {
            let params = load_checkpoint(path).map_err(CliError::from_core)?;
            Ok(LoadedPulse::Net(params))
        }
        PulseSpec::Rect { theta } => {
            Ok(LoadedPulse::Rect(rectangular_pulse(*theta).map_err(CliError::from_core)?))
        }
        PulseSpec::Drag { theta, coeff } => {
            let System::Qutrit(model) = system else {
                return Err(CliError::Config(
                    "a DRAG pulse needs a qutrit system (for the anharmonicity)".into(),
                ));
            };
            let coeff = match coeff {
                Some(c) => *c,
                None => {
                    let cfg = IntegratorConfig::new(n_steps).map_err(CliError::from_core)?;
                    calibrate_drag(FRAC_PI_2, model, &cfg).map_err(CliError::from_core)?
                }
            };
            Ok(LoadedPulse::Drag(
                drag_pulse(*theta, model.delta, coeff).map_err(CliError::from_core)?,
            ))
        }
        PulseSpec::Composite { segments } => {
            let seq = CompositeSequence::new(segments.clone()).map_err(CliError::from_core)?;
            let field = composite_field(&seq);
            Ok(LoadedPulse::Composite(Box::new(seq), field))
        }
        PulseSpec::OptimizedComposite { n_pulses, ga, window } => {
            let mut cfg = ga.apply(Vec::new());
            if let Some(seed) = seed_override {
                cfg.seed = seed;
            }
            let window: Window = window.map(Into::into).unwrap_or_default();
            let seq = optimize_composite(*n_pulses, &cfg, &window).map_err(CliError::from_core)?;
            let field = composite_field(&seq);
            Ok(LoadedPulse::Composite(Box::new(seq), field))
        }
    }
}
