//! One function per subcommand.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use num_complex::Complex64 as C64;

use pulse_core::field::{ControlField, SampledField, T_END, T_START};
use pulse_core::integrate::IntegratorConfig;
use pulse_core::metrics::{
    detuning_sweep, incoherent_bound, pseudo_identity_decay, NoiseParams, SweepConfig, SweepRow,
};
use pulse_core::net::{init_params, load_checkpoint, save_checkpoint, NetworkParams};
use pulse_core::quantum::{PulseMeta, System};
use pulse_core::train::{refine as train_refine, train as train_run, TrainConfig};
use pulse_core::waveform::{verify_waveform, WaveformTrace};

use crate::config::{self, config_hash};
use crate::output::{write_csv, write_json, Meta};
use crate::pulses::{load_pulse, LoadedPulse};
use crate::{CliError, CliResult};

fn numeric(e: pulse_core::Error) -> CliError {
    CliError::Numeric(e.to_string())
}

/// Sample the emitted pulse table `(t, A, phase, I, Q)`.
fn pulse_rows(params: &NetworkParams, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            let t = T_START + (T_END - T_START) * k as f64 / (n - 1) as f64;
            let (a, phi) = params.amplitude_phase(t, FRAC_PI_2);
            vec![t, a, phi, a * phi.cos(), a * phi.sin()]
        })
        .collect()
}

pub fn train(raw: &str, out: &Path, seed: Option<u64>, is_refine: bool) -> CliResult<()> {
    let mut cfg: config::TrainCmdConfig = config::parse(raw)?;
    if let Some(s) = seed {
        cfg.train.seed = Some(s);
    }
    let system = cfg.system.resolve()?;
    if is_refine && !matches!(system, System::Qutrit(_)) {
        return Err(CliError::Config("refine needs a qutrit system".into()));
    }
    let train_cfg: TrainConfig = cfg.train.apply(system);
    train_cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let init = match (&cfg.init_checkpoint, is_refine) {
        (Some(path), _) => load_checkpoint(path).map_err(CliError::from_core)?,
        (None, true) => {
            return Err(CliError::Config("refine needs `init_checkpoint`".into()));
        }
        (None, false) => {
            let mut p = init_params(cfg.init_seed);
            p.omega_max = cfg.omega_max;
            p
        }
    };

    let meta = Meta {
        command: if is_refine { "refine" } else { "train" },
        config_sha256: config_hash(&cfg),
    };
    let (best, report) = if is_refine {
        train_refine(&train_cfg, &init).map_err(numeric)?
    } else {
        train_run(&train_cfg, &init).map_err(numeric)?
    };

    save_checkpoint(&best, &out.join("checkpoint.json")).map_err(CliError::from_core)?;
    write_json(&out.join("report.json"), &meta, &report)?;
    write_csv(
        &out.join("pulse.csv"),
        &meta,
        &[],
        &["t", "amplitude", "phase", "i", "q"],
        pulse_rows(&best, cfg.pulse_csv_points).into_iter(),
    )?;
    println!(
        "{}: {} iterations, best validation loss {:.3e} (iteration {})",
        meta.command, report.iterations, report.best_validation_loss, report.best_iteration
    );
    Ok(())
}

const SWEEP_COLUMNS: [&str; 11] = [
    "delta", "c0", "cx", "cy", "cz", "F_chi", "max_p1", "beta0", "leakage", "theta_rot", "phi_rot",
];

fn sweep_row_values(r: &SweepRow) -> Vec<f64> {
    vec![
        r.delta, r.c.c0, r.c.cx, r.c.cy, r.c.cz, r.f_chi, r.max_p1, r.beta0, r.leakage,
        r.theta_rot, r.phi_rot,
    ]
}

pub fn sweep(raw: &str, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let cfg: config::SweepCmdConfig = config::parse(raw)?;
    let system = cfg.system.resolve()?;
    let pulse = load_pulse(&cfg.pulse, &system, cfg.n_steps, seed)?;
    let grid = cfg.grid.points()?;
    let meta_pulse = match cfg.duration_s {
        Some(t) => Some(PulseMeta::new(t).map_err(CliError::from_core)?),
        None => None,
    };
    let sweep_cfg = SweepConfig {
        integrator: IntegratorConfig::new(cfg.n_steps).map_err(CliError::from_core)?,
        meta: meta_pulse,
        t_dead_s: cfg.t_dead_s,
        emulate_if_hop: cfg.emulate_if_hop,
    };
    let rows = detuning_sweep(&pulse, &grid, &system, &sweep_cfg).map_err(numeric)?;

    let meta = Meta { command: "sweep", config_sha256: config_hash(&cfg) };
    let comments = vec![format!("pulse: {}", pulse.kind())];
    write_csv(
        &out.join("sweep.csv"),
        &meta,
        &comments,
        &SWEEP_COLUMNS,
        rows.iter().map(sweep_row_values),
    )?;
    write_json(&out.join("sweep.json"), &meta, &rows)?;
    let flagged = rows.iter().filter(|r| r.flag.is_some()).count();
    println!("sweep: {} rows ({flagged} flagged)", rows.len());
    Ok(())
}

/// Contiguous `max_p1 >= threshold` window around resonance (grid
/// resolution), preferring the run containing δ = 0, else the longest.
fn threshold_window(rows: &[SweepRow], threshold: f64) -> Option<(f64, f64)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (k, r) in rows.iter().enumerate() {
        let pass = r.flag.is_none() && r.max_p1 >= threshold;
        match (pass, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                runs.push((s, k - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, rows.len() - 1));
    }
    let contains_zero = |&(s, e): &(usize, usize)| {
        rows[s].delta <= 0.0 && rows[e].delta >= 0.0
    };
    runs.iter()
        .find(|r| contains_zero(r))
        .or_else(|| runs.iter().max_by_key(|&&(s, e)| e - s))
        .map(|&(s, e)| (rows[s].delta, rows[e].delta))
}

pub fn compare(raw: &str, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let cfg: config::CompareCmdConfig = config::parse(raw)?;
    if cfg.pulses.len() < 2 {
        return Err(CliError::Config(format!(
            "compare needs at least 2 pulses, got {}",
            cfg.pulses.len()
        )));
    }
    let system = cfg.system.resolve()?;
    let grid = cfg.grid.points()?;
    let sweep_cfg = SweepConfig {
        integrator: IntegratorConfig::new(cfg.n_steps).map_err(CliError::from_core)?,
        ..SweepConfig::default()
    };

    let mut curves: Vec<(String, Option<f64>, Vec<SweepRow>)> = Vec::new();
    for spec in &cfg.pulses {
        let pulse = load_pulse(&spec.pulse, &system, cfg.n_steps, seed)?;
        let rows = detuning_sweep(&pulse, &grid, &system, &sweep_cfg).map_err(numeric)?;
        curves.push((spec.name.clone(), spec.duration_s, rows));
    }

    let meta = Meta { command: "compare", config_sha256: config_hash(&cfg) };
    let mut columns: Vec<String> = vec!["delta".into()];
    for (name, _, _) in &curves {
        columns.push(format!("max_p1_{name}"));
        columns.push(format!("F_chi_{name}"));
    }
    let column_refs: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();
    let rows_iter = (0..grid.len()).map(|k| {
        let mut row = vec![grid[k]];
        for (_, _, rows) in &curves {
            row.push(rows[k].max_p1);
            row.push(rows[k].f_chi);
        }
        row
    });
    write_csv(&out.join("compare.csv"), &meta, &[], &column_refs, rows_iter)?;

    let mut md = String::new();
    md.push_str("# Pulse comparison\n\n");
    md.push_str(&format!(
        "Transfer-efficiency windows at threshold max(p1) >= {}.\n\n",
        cfg.threshold
    ));
    md.push_str("| pulse | window (units of the 2π amplitude) | width | window (MHz) |\n");
    md.push_str("|---|---|---|---|\n");
    let mut summary = Vec::new();
    for (name, duration, rows) in &curves {
        let window = threshold_window(rows, cfg.threshold);
        let (lo, hi, width) = match window {
            Some((lo, hi)) => (lo, hi, hi - lo),
            None => (f64::NAN, f64::NAN, 0.0),
        };
        let mhz = match (window, duration) {
            (Some((lo, hi)), Some(t)) => {
                format!("[{:.2}, {:.2}]", lo / t / 1e6, hi / t / 1e6)
            }
            _ => "-".into(),
        };
        md.push_str(&format!(
            "| {name} | [{lo:.3}, {hi:.3}] | {width:.3} | {mhz} |\n"
        ));
        summary.push(serde_json::json!({
            "name": name,
            "window_low": lo,
            "window_high": hi,
            "width": width,
        }));
    }
    std::fs::write(out.join("compare.md"), format!("{}{}", meta.csv_header(), md))?;
    write_json(&out.join("compare.json"), &meta, &summary)?;
    println!("compare: {} pulses over {} grid points", curves.len(), grid.len());
    Ok(())
}

pub fn export(raw: &str, out: &Path) -> CliResult<()> {
    let cfg: config::ExportCmdConfig = config::parse(raw)?;
    let meta_pulse = PulseMeta::new(cfg.duration_s).map_err(CliError::from_core)?;
    if !(cfg.sample_rate_hz > 0.0 && cfg.sample_rate_hz.is_finite()) {
        return Err(CliError::Config(format!(
            "sample rate must be positive, got {}",
            cfg.sample_rate_hz
        )));
    }
    let params = load_checkpoint(&cfg.checkpoint).map_err(CliError::from_core)?;
    let n = (cfg.duration_s * cfg.sample_rate_hz).round() as usize;
    if n < 2 {
        return Err(CliError::Config("export needs at least 2 samples".into()));
    }
    let meta = Meta { command: "export", config_sha256: config_hash(&cfg) };
    let comments = vec![
        format!("duration_s: {}", cfg.duration_s),
        format!("sample_rate_hz: {}", cfg.sample_rate_hz),
        format!("omega_2pi_rad_s: {}", meta_pulse.omega_2pi()),
        format!("amplitude_cap: {}", params.omega_max),
        "amplitudes in units of the 2pi rotation amplitude".to_string(),
    ];
    let rows = (0..n).map(|k| {
        let t_s = k as f64 / cfg.sample_rate_hz;
        let t = T_START + (T_END - T_START) * (t_s / cfg.duration_s);
        let (a, phi) = params.amplitude_phase(t, FRAC_PI_2);
        vec![t_s, a * phi.cos(), a * phi.sin()]
    });
    write_csv(&out.join("iq.csv"), &meta, &comments, &["t_seconds", "i", "q"], rows)?;
    println!("export: {n} samples at {} GS/s", cfg.sample_rate_hz / 1e9);
    Ok(())
}

/// Waveform CSV reader: either `t_seconds,value` rows or a
/// `# sample_rate: <Hz>` comment followed by one value per line.
pub fn read_waveform_csv(path: &Path) -> CliResult<WaveformTrace> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut sample_rate: Option<f64> = None;
    let mut times: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("sample_rate:") {
                sample_rate = Some(v.trim().parse().map_err(|_| {
                    CliError::Config(format!("bad sample_rate comment: {line:?}"))
                })?);
            }
            continue;
        }
        if line.chars().next().is_some_and(|c| c.is_alphabetic()) {
            continue; // header row
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |s: &str| -> CliResult<f64> {
            s.parse()
                .map_err(|_| CliError::Config(format!("bad number {s:?} in waveform CSV")))
        };
        match fields.len() {
            1 => values.push(parse(fields[0])?),
            2 => {
                times.push(parse(fields[0])?);
                values.push(parse(fields[1])?);
            }
            n => {
                return Err(CliError::Config(format!(
                    "waveform CSV rows need 1 or 2 fields, got {n}"
                )))
            }
        }
    }
    let sample_rate = match (sample_rate, times.len()) {
        (Some(r), _) => r,
        (None, n) if n >= 2 => {
            let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
            if dt <= 0.0 {
                return Err(CliError::Config("waveform times are not increasing".into()));
            }
            1.0 / dt
        }
        _ => {
            return Err(CliError::Config(
                "waveform CSV needs a time column or a `# sample_rate:` comment".into(),
            ))
        }
    };
    Ok(WaveformTrace { sample_rate, samples: values })
}

pub fn verify(raw: &str, out: &Path) -> CliResult<()> {
    let cfg: config::VerifyCmdConfig = config::parse(raw)?;
    let params = load_checkpoint(&cfg.checkpoint).map_err(CliError::from_core)?;
    let trace = read_waveform_csv(&cfg.waveform_csv)?;
    let meta_pulse = PulseMeta::new(cfg.duration_s).map_err(CliError::from_core)?;
    let reference = LoadedPulse::Net(params);
    let integrator = IntegratorConfig::new(cfg.n_steps).map_err(CliError::from_core)?;
    let report = verify_waveform(
        &trace,
        cfg.f_center_hz,
        &meta_pulse,
        &reference,
        &integrator,
        cfg.volts_per_unit,
    )
    .map_err(numeric)?;

    let meta = Meta { command: "verify", config_sha256: config_hash(&cfg) };
    // envelope resampled onto the fidelity grid for the (t, I, Q, F) table
    let env = SampledField::new(report.envelope.clone()).map_err(numeric)?;
    let rows = report.fidelity.iter().map(|&(t, f)| {
        let v = env.value(t);
        vec![t, v.re, v.im, f]
    });
    write_csv(&out.join("fidelity.csv"), &meta, &[], &["t", "i", "q", "f"], rows)?;
    write_json(
        &out.join("verify.json"),
        &meta,
        &serde_json::json!({
            "min_fidelity": report.min_fidelity,
            "amplitude_scale": report.scale,
            "samples": trace.samples.len(),
            "sample_rate_hz": trace.sample_rate,
        }),
    )?;
    println!("verify: min F(t) = {:.6}", report.min_fidelity);
    Ok(())
}

pub fn decay(raw: &str, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let mut cfg: config::DecayCmdConfig = config::parse(raw)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let system = match &cfg.system {
        Some(spec) => spec.resolve()?,
        None => System::Qubit,
    };
    let pulse = load_pulse(&cfg.pulse, &system, cfg.n_steps, Some(cfg.seed))?;
    let noise = NoiseParams { t1_s: cfg.t1_s, t2_s: cfg.t2_s, pulse_s: cfg.duration_s };
    noise.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let integrator = IntegratorConfig::new(cfg.n_steps).map_err(CliError::from_core)?;
    let trace = pseudo_identity_decay(
        &pulse,
        cfg.n_max,
        &noise,
        &integrator,
        cfg.shots.map(|s| (s, cfg.seed)),
    )
    .map_err(numeric)?;
    let bound = incoherent_bound(cfg.duration_s, cfg.t1_s, cfg.t2_s)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let meta = Meta { command: "decay", config_sha256: config_hash(&cfg) };
    write_csv(
        &out.join("decay.csv"),
        &meta,
        &[],
        &["n_blocks", "z"],
        trace.n.iter().zip(&trace.z).map(|(&n, &z)| vec![n as f64, z]),
    )?;
    write_json(
        &out.join("decay.json"),
        &meta,
        &serde_json::json!({
            "fidelity": trace.fidelity,
            "fidelity_sigma": trace.fidelity_sigma,
            "decay_per_block": trace.decay_per_block,
            "incoherent_bound": bound,
            "n_blocks": trace.n.len(),
        }),
    )?;
    println!(
        "decay: fitted per-pulse fidelity {:.6} (incoherent bound {:.6})",
        trace.fidelity, bound
    );
    Ok(())
}
