//! Delay-scan orchestration: one propagation per planned delay on a bounded
//! worker pool, ordered aggregation, fits, and result files.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    analytic_envelope, default_cutoff, demodulate, fit_coherence, fit_sinusoid, fringe_record, fringe_series,
    xfrog_trace, CoherenceFit, DemodOptions, Envelope, EnvelopeRecord, FringeRecord, FringeSeries, SinusoidFit,
    Spectrogram,
};
use crate::config::RunConfig;
use crate::dump::{DumpKind, Matrix};
use crate::error::{Error, Result};
use crate::medium::EnsembleSpec;
use crate::pulse::{
    chirp_stretch, compose_pair, plan_scan, synthesize, Launch, PlannedDelay, PulseSpec, TimeAxis, Waveform,
};
use crate::solver::{run_propagation, GridSpec, Propagation, PropagationOptions, SnapshotStride};

pub const RESULTS_HEADER: &str =
    "delay_fs,probe_peak_W,pump_peak_time_fs,probe_peak_time_fs,separation_fs,probe_energy_pJ,peak_inst_freq_THz";

/// Snapshot sampling used for field dumps.
const DUMP_STRIDE: SnapshotStride = SnapshotStride { steps: 200, cells: 20 };

/// Everything a single delay needs, derived once from a validated config.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: RunConfig,
    pub ensemble: EnsembleSpec,
    pub grid: GridSpec,
    pub pump: PulseSpec,
    pub probe: PulseSpec,
    pub launch: Launch,
    /// Pump peak time at the source plane.
    pub pump_peak_s: f64,
}

/// Result of one delay.
#[derive(Debug, Clone)]
pub struct DelayOutcome {
    pub planned: PlannedDelay,
    pub record: FringeRecord,
    pub envelope: EnvelopeRecord,
    pub propagation: Propagation,
}

impl Scenario {
    pub fn new(config: &RunConfig) -> Result<Scenario> {
        config.validate()?;
        let ensemble = config.ensemble.calibrated(&config.medium)?;
        let grid = config.grid.resolve(&config.medium, config.ensemble.center_wavelength_m)?;
        let pump = config.coupled_pump();
        let probe = config.coupled_probe();
        let pump_peak_s = 3.5 * pump.fwhm_s * chirp_stretch(&pump);
        Ok(Scenario { config: config.clone(), ensemble, grid, pump, probe, launch: config.launch(), pump_peak_s })
    }

    /// Source-plane time axis long enough for the pair at `delay_s`.
    pub fn injection_axis(&self, delay_s: f64) -> TimeAxis {
        let end = self.pump_peak_s + delay_s + 3.5 * self.probe.fwhm_s * chirp_stretch(&self.probe);
        TimeAxis { t_start_s: 0.0, dt_s: self.grid.dt_s, len: (end / self.grid.dt_s).ceil() as usize + 1 }
    }

    pub fn injected(&self, delay_s: f64) -> Result<Waveform> {
        compose_pair(&self.pump, &self.probe, delay_s, &self.launch, self.injection_axis(delay_s), self.pump_peak_s)
    }

    pub fn demod_options(&self, delay_s: f64) -> DemodOptions {
        DemodOptions {
            omega0: self.probe.carrier_omega(),
            cutoff_rad_per_s: default_cutoff(self.pump.fwhm_s.min(self.probe.fwhm_s)),
            launch: self.launch,
            min_peak_separation_s: 0.5 * delay_s,
        }
    }

    /// Time axis of a tap record: sample `k` holds the field after step `k + 1`.
    pub fn tap_axis(&self, propagation: &Propagation) -> TimeAxis {
        TimeAxis { t_start_s: self.grid.dt_s, dt_s: self.grid.dt_s, len: propagation.output.e_samples.len() }
    }

    pub fn propagate(&self, delay_s: f64, options: &PropagationOptions) -> Result<Propagation> {
        let injected = self.injected(delay_s)?;
        run_propagation(&self.config.medium, &self.ensemble, &self.grid, &injected, options)
    }

    pub fn analyze(&self, delay_s: f64, propagation: &Propagation) -> Result<(EnvelopeRecord, FringeRecord)> {
        let axis = self.tap_axis(propagation);
        let env = demodulate(&propagation.output.e_samples, axis, &self.demod_options(delay_s))?;
        let record = fringe_record(delay_s, &env, self.config.analysis.separation)?;
        Ok((env, record))
    }

    pub fn simulate(&self, planned: &PlannedDelay, snapshots: bool) -> Result<DelayOutcome> {
        let options = PropagationOptions {
            snapshots: snapshots.then_some(DUMP_STRIDE),
            check_invariants: false,
            ..Default::default()
        };
        let propagation = self.propagate(planned.delay_s, &options)?;
        let (envelope, record) = self.analyze(planned.delay_s, &propagation)?;
        Ok(DelayOutcome { planned: *planned, record, envelope, propagation })
    }

    /// Envelope of the transform-limited input probe, used as the X-FROG gate.
    pub fn reference_envelope(&self) -> Result<Envelope> {
        let half = 4.0 * self.probe.fwhm_s;
        let axis = TimeAxis { t_start_s: 0.0, dt_s: self.grid.dt_s, len: (2.0 * half / self.grid.dt_s) as usize + 1 };
        let gate = PulseSpec { spectral_phase_coeffs: Vec::new(), ..self.probe.clone() };
        let w = synthesize(&gate, &self.launch, axis, half)?;
        analytic_envelope(
            &w.samples,
            axis,
            self.probe.carrier_omega(),
            self.demod_options(0.0).cutoff_rad_per_s,
            &self.launch,
        )
    }

    /// X-FROG trace of the output record around both pulses.
    pub fn spectrogram(&self, record: &EnvelopeRecord, reference: &Envelope) -> Result<Spectrogram> {
        let env = &record.envelope;
        let max = env.intensity_w.iter().fold(0.0_f64, |m, &v| m.max(v));
        let lit: Vec<usize> = (0..env.len()).filter(|&k| env.intensity_w[k] > 1e-6 * max).collect();
        let (first, last) = (lit.first().copied().unwrap_or(0), lit.last().copied().unwrap_or(0));
        let pad = (self.probe.fwhm_s / env.axis.dt_s) as usize;
        let lo = first.saturating_sub(pad);
        let hi = (last + pad).min(env.len() - 1);
        // Two samples per cutoff period keep the band inside the transform.
        let stride = ((std::f64::consts::PI / (2.0 * self.demod_options(0.0).cutoff_rad_per_s)) / env.axis.dt_s)
            .floor()
            .max(1.0) as usize;
        let crop = Envelope {
            axis: TimeAxis { t_start_s: env.t_s(lo), dt_s: env.axis.dt_s, len: hi - lo + 1 },
            omega0: env.omega0,
            amplitude: env.amplitude[lo..=hi].to_vec(),
            intensity_w: env.intensity_w[lo..=hi].to_vec(),
            inst_freq_rad_per_s: env.inst_freq_rad_per_s[lo..=hi].to_vec(),
        };
        xfrog_trace(
            &crop.decimate(stride),
            &reference.decimate(stride),
            self.config.analysis.spectrogram_freq_bins,
            self.config.analysis.spectrogram_time_bins,
        )
    }
}

/// Fits for one nominal delay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NominalSummary {
    pub nominal_delay_fs: f64,
    pub visibility: f64,
    pub fitted_period_fs: f64,
    pub intensity_phase_rad: f64,
    pub separation_phase_rad: f64,
    pub lag_cycles: f64,
    pub fringe_free: bool,
    pub separation_amplitude_fs: f64,
    pub inst_freq_period_fs: f64,
    pub inst_freq_amplitude_thz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub nominal: Vec<NominalSummary>,
    /// The coherence fields are null when fewer than three nominal delays ran.
    pub t_coh_fs: Option<f64>,
    pub r_squared: Option<f64>,
    pub coherence_amplitude: Option<f64>,
    pub non_decaying: Option<bool>,
}

/// In-memory result of a completed scan.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub records: Vec<FringeRecord>,
    pub planned: Vec<PlannedDelay>,
    pub series: Vec<FringeSeries>,
    pub inst_freq: Vec<SinusoidFit>,
    pub coherence: Option<CoherenceFit>,
    pub summary: Summary,
}

impl ScanResult {
    /// Records belonging to nominal delay `index`, in fine-delay order.
    pub fn nominal_records(&self, index: usize) -> Vec<FringeRecord> {
        self.planned.iter().zip(&self.records).filter(|(p, _)| p.nominal_index == index).map(|(_, r)| *r).collect()
    }
}

pub fn csv_row(r: &FringeRecord) -> String {
    format!(
        "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
        r.delay_s * 1e15,
        r.probe_peak_w,
        r.pump_peak_time_s * 1e15,
        r.probe_peak_time_s * 1e15,
        r.separation_s * 1e15,
        r.probe_energy_j * 1e12,
        r.peak_inst_freq_rad_per_s / (2.0 * std::f64::consts::PI) * 1e-12,
    )
}

pub fn results_csv(records: &[FringeRecord]) -> String {
    let mut out = String::with_capacity(96 * (records.len() + 1));
    let _ = writeln!(out, "{RESULTS_HEADER}");
    for r in records {
        out.push_str(&csv_row(r));
    }
    out
}

/// Per-nominal fringe fits and the visibility decay fit.
pub fn summarize(planned: &[PlannedDelay], records: &[FringeRecord], nominal_delays_s: &[f64]) -> Result<ScanResult> {
    let mut series = Vec::new();
    let mut inst_freq = Vec::new();
    let mut nominal = Vec::new();
    for (i, &tau) in nominal_delays_s.iter().enumerate() {
        let rows: Vec<&FringeRecord> =
            planned.iter().zip(records).filter(|(p, _)| p.nominal_index == i).map(|(_, r)| r).collect();
        let delays: Vec<f64> = rows.iter().map(|r| r.delay_s).collect();
        let peaks: Vec<f64> = rows.iter().map(|r| r.probe_peak_w).collect();
        let seps: Vec<f64> = rows.iter().map(|r| r.separation_s).collect();
        let freqs: Vec<f64> = rows.iter().map(|r| r.peak_inst_freq_rad_per_s).collect();
        let s = fringe_series(&delays, &peaks, &seps)?;
        let f = fit_sinusoid(&delays, &freqs, None)?;
        nominal.push(NominalSummary {
            nominal_delay_fs: tau * 1e15,
            visibility: s.visibility,
            fitted_period_fs: s.period_s * 1e15,
            intensity_phase_rad: s.intensity.phase_rad,
            separation_phase_rad: s.separation.phase_rad,
            lag_cycles: s.lag_cycles,
            fringe_free: s.fringe_free,
            separation_amplitude_fs: s.separation.amplitude * 1e15,
            inst_freq_period_fs: f.period * 1e15,
            inst_freq_amplitude_thz: f.amplitude / (2.0 * std::f64::consts::PI) * 1e-12,
        });
        series.push(s);
        inst_freq.push(f);
    }
    let visibilities: Vec<f64> = series.iter().map(|s| s.visibility).collect();
    let coherence =
        if nominal_delays_s.len() >= 3 { Some(fit_coherence(nominal_delays_s, &visibilities)?) } else { None };
    let summary = Summary {
        nominal,
        t_coh_fs: coherence.as_ref().map(|c| c.t_coh_s * 1e15),
        r_squared: coherence.as_ref().map(|c| c.r_squared),
        coherence_amplitude: coherence.as_ref().map(|c| c.amplitude),
        non_decaying: coherence.as_ref().map(|c| c.non_decaying),
    };
    Ok(ScanResult { records: records.to_vec(), planned: planned.to_vec(), series, inst_freq, coherence, summary })
}

/// Progress callback: `(finished delay, completed count, total)`.
pub type Progress<'a> = &'a (dyn Fn(&PlannedDelay, usize, usize) + Sync);

/// Runs the whole scan and writes `results.csv`, `summary.json` and any
/// requested per-delay files under `config.outputs.dir`.
pub fn run_scan(config: &RunConfig, progress: Option<Progress<'_>>) -> Result<ScanResult> {
    let scenario = Scenario::new(config)?;
    let planned = plan_scan(&config.scan)?;
    let dir = config.outputs.dir.clone();
    fs::create_dir_all(&dir)?;
    if config.outputs.emit_spectrograms {
        fs::create_dir_all(dir.join("spectrograms"))?;
    }
    if config.outputs.emit_field_dumps {
        fs::create_dir_all(dir.join("fields"))?;
    }
    let reference = if config.outputs.emit_spectrograms { Some(scenario.reference_envelope()?) } else { None };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count())
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let done = std::sync::atomic::AtomicUsize::new(0);
    let total = planned.len();
    let outcomes: Vec<Result<FringeRecord>> = pool.install(|| {
        planned
            .par_iter()
            .map(|p| {
                let r = run_one(&scenario, p, &dir, reference.as_ref());
                let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                if let Some(cb) = progress {
                    cb(p, n, total);
                }
                r.map_err(|e| Error::Delay { delay_fs: p.delay_s * 1e15, source: Box::new(e) })
            })
            .collect()
    });

    let mut records = Vec::with_capacity(total);
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        write_file(&dir.join("results.csv.partial"), results_csv(&records).as_bytes())?;
        return Err(e);
    }

    let result = summarize(&planned, &records, &config.scan.nominal_delays_s);
    write_file(&dir.join("results.csv"), results_csv(&records).as_bytes())?;
    let result = result?;
    let json = serde_json::to_string_pretty(&result.summary).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    write_file(&dir.join("summary.json"), format!("{json}\n").as_bytes())?;
    Ok(result)
}

fn run_one(
    scenario: &Scenario,
    planned: &PlannedDelay,
    dir: &Path,
    reference: Option<&Envelope>,
) -> Result<FringeRecord> {
    let outputs = &scenario.config.outputs;
    let outcome = scenario.simulate(planned, outputs.emit_field_dumps)?;
    let tag = planned.attoseconds();
    if let Some(reference) = reference {
        let s = scenario.spectrogram(&outcome.envelope, reference)?;
        write_matrix(&dir.join("spectrograms").join(format!("xfrog_{tag}as.bin")), &s.to_matrix())?;
    }
    if let Some(snaps) = &outcome.propagation.snapshots {
        let base = Matrix {
            kind: DumpKind::Field,
            rows: snaps.rows(),
            cols: snaps.z_positions,
            row_step: scenario.grid.dt_s * snaps.stride.steps as f64,
            col_step: scenario.grid.dz_m * snaps.stride.cells as f64,
            row_origin: scenario.grid.dt_s * snaps.stride.steps as f64,
            col_origin: 0.0,
            data: snaps.field.clone(),
        };
        write_matrix(&dir.join("fields").join(format!("field_{tag}as.bin")), &base)?;
        let inversion = Matrix { kind: DumpKind::Inversion, data: snaps.inversion.clone(), ..base };
        write_matrix(&dir.join("fields").join(format!("inversion_{tag}as.bin")), &inversion)?;
    }
    Ok(outcome.record)
}

fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut bytes = Vec::with_capacity(crate::dump::HEADER_LEN + 8 * m.data.len());
    m.write_to(&mut bytes)?;
    write_file(path, &bytes)
}

/// Writes through a `.partial` sibling renamed on success, so a crash never
/// leaves a truncated file under the final name.
fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let is_partial = path.extension().and_then(|e| e.to_str()) == Some("partial");
    let target = if is_partial {
        path.to_path_buf()
    } else {
        let mut tmp = PathBuf::from(path);
        tmp.set_file_name(format!("{}.partial", path.file_name().and_then(|n| n.to_str()).unwrap_or("out")));
        tmp
    };
    {
        let mut w = BufWriter::new(fs::File::create(&target)?);
        std::io::Write::write_all(&mut w, bytes)?;
        std::io::Write::flush(&mut w)?;
    }
    if !is_partial {
        fs::rename(&target, path)?;
    }
    Ok(())
}
