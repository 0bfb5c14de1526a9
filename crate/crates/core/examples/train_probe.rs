use pulse_core::metrics::{detuning_sweep, SweepConfig};
use pulse_core::net::{init_params, NetField};
use pulse_core::quantum::System;
use pulse_core::train::{train, TrainConfig};
use std::f64::consts::FRAC_PI_2;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let iters: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let batch: usize = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(128);
    let patience: usize = std::env::args().nth(4).and_then(|s| s.parse().ok()).unwrap_or(5);
    let cfg = TrainConfig { seed, max_iters: iters, batch_size: batch, plateau_patience: patience, ..TrainConfig::default() };
    let t0 = std::time::Instant::now();
    let (best, report) = train(&cfg, &init_params(seed)).unwrap();
    println!(
        "seed {seed}: iters {} wall {:.1}s best-val {:.3e} (at iter {}) converged {}",
        report.iterations,
        t0.elapsed().as_secs_f64(),
        report.best_validation_loss,
        report.best_iteration,
        report.converged
    );
    println!(
        "bandwidth: centroid {:.3} rms {:.3}; lr drops: {:?}",
        report.bandwidth.centroid, report.bandwidth.rms_width, report.lr_history
    );
    // F_chi over the validation grid
    let field = NetField::new(&best, FRAC_PI_2);
    let rows = detuning_sweep(&field, &cfg.validation_grid(), &System::Qubit, &SweepConfig::default()).unwrap();
    let min_f = rows.iter().map(|r| r.f_chi).fold(f64::INFINITY, f64::min);
    let below = rows.iter().filter(|r| r.f_chi < 0.999).count();
    println!("min F_chi over grid: {min_f:.6}; points below 0.999: {below}/101");
    let hist = &report.validation_history;
    for (it, v) in hist.iter().step_by((hist.len() / 12).max(1)) {
        println!("  val @ {it:5}: {v:.3e}");
    }
}
