use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::envelope::EnvelopeRecord;

/// How pulse arrival times are read off the output envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationMode {
    /// Quadratically refined intensity maxima.
    #[default]
    Peak,
    /// Intensity-weighted mean time within each window.
    Centroid,
}

/// Per-delay observables of the output pulse pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeRecord {
    pub delay_s: f64,
    pub probe_peak_w: f64,
    pub probe_peak_time_s: f64,
    pub pump_peak_time_s: f64,
    pub separation_s: f64,
    pub probe_energy_j: f64,
    /// Instantaneous angular frequency at the probe peak.
    pub peak_inst_freq_rad_per_s: f64,
}

pub fn fringe_record(delay_s: f64, record: &EnvelopeRecord, mode: SeparationMode) -> Result<FringeRecord> {
    let env = &record.envelope;
    let pump = env.argmax(record.pump_window.clone());
    let probe = env.argmax(record.probe_window.clone());
    let (pump_peak_t, _) = env.refined_peak(pump);
    let (probe_peak_t, probe_peak_w) = env.refined_peak(probe);
    let (pump_t, probe_t) = match mode {
        SeparationMode::Peak => (pump_peak_t, probe_peak_t),
        SeparationMode::Centroid => {
            (env.centroid(record.pump_window.clone()), env.centroid(record.probe_window.clone()))
        }
    };
    let separation_s = probe_t - pump_t;
    if separation_s <= 0.0 {
        return Err(Error::WindowSplit(format!("probe arrives {:.3} fs before the pump", -separation_s * 1e15)));
    }
    Ok(FringeRecord {
        delay_s,
        probe_peak_w,
        probe_peak_time_s: probe_t,
        pump_peak_time_s: pump_t,
        separation_s,
        probe_energy_j: env.energy(record.probe_window.clone()),
        peak_inst_freq_rad_per_s: env.inst_freq_at(probe_peak_t),
    })
}
