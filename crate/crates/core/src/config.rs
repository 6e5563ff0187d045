//! TOML run configuration.
//!
//! Every key is optional; omitted keys take the documented defaults and
//! unknown keys are rejected. Print the full default file with
//! `qdsoa-ramsey print-defaults`.

use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize};

use crate::analysis::SeparationMode;
use crate::error::{Error, Result};
use crate::medium::{EnsembleSpec, MediumSpec};
use crate::pulse::{envelope_overlap, plan_scan, Launch, PulseSpec, ScanPlan, MAX_ENVELOPE_OVERLAP};
use crate::solver::GridSettings;

/// Converts external pulse energies into the guided mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Coupling {
    pub mode_area_m2: f64,
    /// Fraction of each pulse's energy that enters the waveguide.
    pub factor: f64,
}

impl Default for Coupling {
    fn default() -> Self {
        Coupling { mode_area_m2: 0.5e-12, factor: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    pub separation: SeparationMode,
    pub spectrogram_freq_bins: usize,
    pub spectrogram_time_bins: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings { separation: SeparationMode::Peak, spectrogram_freq_bins: 256, spectrogram_time_bins: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub dir: PathBuf,
    pub emit_spectrograms: bool,
    pub emit_field_dumps: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { dir: PathBuf::from("out"), emit_spectrograms: false, emit_field_dumps: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Concurrent propagations; 0 uses every available core.
    pub parallelism: usize,
    pub medium: MediumSpec,
    pub ensemble: EnsembleSpec,
    pub grid: GridSettings,
    #[serde(deserialize_with = "pump_table")]
    pub pump: PulseSpec,
    #[serde(deserialize_with = "probe_table")]
    pub probe: PulseSpec,
    pub scan: ScanPlan,
    pub coupling: Coupling,
    pub analysis: AnalysisSettings,
    pub outputs: Outputs,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            parallelism: 0,
            medium: MediumSpec::default(),
            ensemble: EnsembleSpec::default(),
            grid: GridSettings::default(),
            pump: PulseSpec::pump(),
            probe: PulseSpec::probe(),
            scan: ScanPlan::default(),
            coupling: Coupling::default(),
            analysis: AnalysisSettings::default(),
            outputs: Outputs::default(),
        }
    }
}

/// A `[pump]`/`[probe]` table that only overrides the keys it names.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseOverrides {
    center_wavelength_m: Option<f64>,
    fwhm_s: Option<f64>,
    energy_j: Option<f64>,
    carrier_phase_rad: Option<f64>,
    spectral_phase_coeffs: Option<Vec<f64>>,
}

impl PulseOverrides {
    fn apply(self, mut base: PulseSpec) -> PulseSpec {
        if let Some(v) = self.center_wavelength_m {
            base.center_wavelength_m = v;
        }
        if let Some(v) = self.fwhm_s {
            base.fwhm_s = v;
        }
        if let Some(v) = self.energy_j {
            base.energy_j = v;
        }
        if let Some(v) = self.carrier_phase_rad {
            base.carrier_phase_rad = v;
        }
        if let Some(v) = self.spectral_phase_coeffs {
            base.spectral_phase_coeffs = v;
        }
        base
    }
}

fn pump_table<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<PulseSpec, D::Error> {
    Ok(PulseOverrides::deserialize(d)?.apply(PulseSpec::pump()))
}

fn probe_table<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<PulseSpec, D::Error> {
    Ok(PulseOverrides::deserialize(d)?.apply(PulseSpec::probe()))
}

impl RunConfig {
    /// Parses and validates a configuration file's text.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Error::ConfigSyntax { line, message: e.message().to_string() }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse(&text)
    }

    /// The full default configuration as TOML.
    pub fn defaults_toml() -> String {
        toml::to_string(&RunConfig::default()).expect("default config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        self.ensemble.validate()?;
        self.pump.validate("pump")?;
        self.probe.validate("probe")?;
        plan_scan(&self.scan)?;
        if self.scan.fine_count() < 8 {
            return Err(Error::validation(format!(
                "scan must hold at least 8 fine delays per nominal delay, got {}",
                self.scan.fine_count()
            )));
        }
        if !(self.coupling.mode_area_m2 > 0.0 && self.coupling.mode_area_m2.is_finite()) {
            return Err(Error::validation("coupling.mode_area_m2 must be > 0"));
        }
        if !(self.coupling.factor > 0.0 && self.coupling.factor <= 1.0) {
            return Err(Error::validation(format!("coupling.factor must lie in (0, 1], got {}", self.coupling.factor)));
        }
        if self.analysis.spectrogram_freq_bins == 0 || self.analysis.spectrogram_time_bins == 0 {
            return Err(Error::validation("analysis spectrogram bins must be > 0"));
        }
        let grid = self.grid.resolve(&self.medium, self.ensemble.center_wavelength_m)?;
        let shortest = self.scan.nominal_delays_s.iter().cloned().fold(f64::INFINITY, f64::min);
        let overlap = envelope_overlap(&self.pump, &self.probe, shortest, grid.dt_s)?;
        if overlap > MAX_ENVELOPE_OVERLAP {
            return Err(Error::validation(format!(
                "scan.nominal_delays_s: {:.1} fs leaves pump and probe overlapping ({overlap:.2e} > {MAX_ENVELOPE_OVERLAP:.0e})",
                shortest * 1e15
            )));
        }
        Ok(())
    }

    /// Pump as it enters the waveguide.
    pub fn coupled_pump(&self) -> PulseSpec {
        PulseSpec { energy_j: self.pump.energy_j * self.coupling.factor, ..self.pump.clone() }
    }

    pub fn coupled_probe(&self) -> PulseSpec {
        PulseSpec { energy_j: self.probe.energy_j * self.coupling.factor, ..self.probe.clone() }
    }

    pub fn launch(&self) -> Launch {
        Launch { mode_area_m2: self.coupling.mode_area_m2, refractive_index: self.medium.background_index }
    }

    pub fn worker_count(&self) -> usize {
        if self.parallelism == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            self.parallelism
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.scan.nominal_delays_s, vec![600e-15, 650e-15, 750e-15, 900e-15]);
        assert_eq!(c.medium.t2_s, 340e-15);
        assert_eq!(c.pump.fwhm_s, 150e-15);
        assert_eq!(c.probe.center_wavelength_m, 1.55e-6);
    }

    #[test]
    fn negative_fine_step_rejected() {
        let err = RunConfig::parse("[scan]\nfine_step_s = -1e-15\n").unwrap_err();
        assert!(matches!(&err, Error::Validation(m) if m.contains("fine_step_s")), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_key_names_it() {
        let err = RunConfig::parse("[medium]\nlength_m = 1e-4\ntemperature = 300\n").unwrap_err();
        match err {
            Error::ConfigSyntax { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("temperature"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_line() {
        let err = RunConfig::parse("parallelism = 2\n[grid\n").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn partial_pulse_table_keeps_role_defaults() {
        let c = RunConfig::parse("[pump]\nfwhm_s = 120e-15\n").unwrap();
        assert_eq!(c.pump.energy_j, 35e-12);
        assert_eq!(c.pump.fwhm_s, 120e-15);
        assert_eq!(c.probe.energy_j, 20e-12);
    }

    #[test]
    fn overlapping_delay_rejected() {
        let err = RunConfig::parse("[scan]\nnominal_delays_s = [200e-15, 600e-15]\n").unwrap_err();
        assert!(matches!(&err, Error::Validation(m) if m.contains("overlapping")), "{err}");
    }

    #[test]
    fn defaults_round_trip() {
        let text = RunConfig::defaults_toml();
        assert_eq!(RunConfig::parse(&text).unwrap(), RunConfig::default());
    }

    #[test]
    fn coupling_scales_energies() {
        let c = RunConfig::default();
        assert!((c.coupled_pump().energy_j - 7e-12).abs() < 1e-24);
        assert!((c.coupled_probe().energy_j - 4e-12).abs() < 1e-24);
    }
}
