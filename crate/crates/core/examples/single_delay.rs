//! Propagates the default pulse pair at one delay and prints the extracted observables.
//!
//! `cargo run --release -p qdsoa-ramsey --example single_delay -- 600`

use std::time::Instant;

use qdsoa_ramsey::pulse::PlannedDelay;
use qdsoa_ramsey::{RunConfig, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let delay_fs: f64 = std::env::args().nth(1).map_or(Ok(600.0), |a| a.parse())?;
    let scenario = Scenario::new(&RunConfig::default())?;
    let planned = PlannedDelay { nominal_index: 0, nominal_s: delay_fs * 1e-15, delay_s: delay_fs * 1e-15 };
    let start = Instant::now();
    let outcome = scenario.simulate(&planned, false)?;
    let r = outcome.record;
    println!(
        "grid: {} cells, dt = {:.4} fs, {} steps",
        scenario.grid.num_cells,
        scenario.grid.dt_s * 1e15,
        outcome.propagation.output.e_samples.len()
    );
    println!("dipole = {:.4e} C m", scenario.ensemble.dipole_moment_cm);
    println!("probe peak {:.6} W at {:.4} fs", r.probe_peak_w, r.probe_peak_time_s * 1e15);
    println!("pump peak at {:.4} fs, separation {:.4} fs", r.pump_peak_time_s * 1e15, r.separation_s * 1e15);
    println!(
        "probe energy {:.6} pJ, peak frequency {:.4} THz",
        r.probe_energy_j * 1e12,
        r.peak_inst_freq_rad_per_s / (2.0 * std::f64::consts::PI) * 1e-12
    );
    println!("elapsed {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}
