//! Pump/probe waveform synthesis, spectral phase shaping, pair composition and
//! delay-scan planning.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{angular_frequency, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};
use crate::spectral;

/// Largest fraction of pulse energy a time window may clip.
pub const MAX_CLIPPED_FRACTION: f64 = 1e-6;

/// Largest normalized envelope overlap accepted between pump and probe.
pub const MAX_ENVELOPE_OVERLAP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSpec {
    pub center_wavelength_m: f64,
    /// Intensity FWHM of the transform-limited envelope.
    pub fwhm_s: f64,
    pub energy_j: f64,
    /// Optical phase of the carrier at the envelope peak.
    pub carrier_phase_rad: f64,
    /// Spectral phase `Σ c_k (ω-ω₀)^k`, `k = 0, 1, 2, ...`.
    pub spectral_phase_coeffs: Vec<f64>,
}

impl Default for PulseSpec {
    fn default() -> Self {
        PulseSpec {
            center_wavelength_m: 1.55e-6,
            fwhm_s: 150e-15,
            energy_j: 20e-12,
            carrier_phase_rad: 0.0,
            spectral_phase_coeffs: Vec::new(),
        }
    }
}

impl PulseSpec {
    pub fn pump() -> Self {
        PulseSpec { energy_j: 35e-12, ..Default::default() }
    }

    pub fn probe() -> Self {
        PulseSpec { energy_j: 20e-12, ..Default::default() }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.fwhm_s > 0.0 && self.fwhm_s.is_finite()) {
            return Err(Error::validation(format!("{name}.fwhm_s must be > 0")));
        }
        if !(self.energy_j >= 0.0 && self.energy_j.is_finite()) {
            return Err(Error::validation(format!("{name}.energy_j must be >= 0")));
        }
        if !(self.center_wavelength_m > 0.0 && self.center_wavelength_m.is_finite()) {
            return Err(Error::validation(format!("{name}.center_wavelength_m must be > 0")));
        }
        if self.spectral_phase_coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation(format!("{name}.spectral_phase_coeffs must be finite")));
        }
        Ok(())
    }

    pub fn carrier_omega(&self) -> f64 {
        angular_frequency(self.center_wavelength_m)
    }

    /// Carrier period `λ₀/c`.
    pub fn carrier_period(&self) -> f64 {
        self.center_wavelength_m / SPEED_OF_LIGHT
    }

    /// Peak power (W) of the transform-limited Gaussian.
    pub fn peak_power(&self) -> f64 {
        self.energy_j / (self.fwhm_s * gaussian_area_factor())
    }

    /// Standard deviation of the intensity envelope.
    pub fn intensity_sigma(&self) -> f64 {
        self.fwhm_s / (2.0 * (2.0 * LN_2).sqrt())
    }

    pub fn is_shaped(&self) -> bool {
        self.spectral_phase_coeffs.iter().any(|&c| c != 0.0)
    }
}

/// `∫ exp(-4 ln2 t²/τ²) dt / τ`.
fn gaussian_area_factor() -> f64 {
    (PI / (4.0 * LN_2)).sqrt()
}

/// How pulse energy maps to field amplitude at the injection plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Launch {
    pub mode_area_m2: f64,
    pub refractive_index: f64,
}

impl Launch {
    /// Instantaneous power (W) carried by a field sample.
    pub fn power(&self, e_field: f64) -> f64 {
        self.refractive_index * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * self.mode_area_m2 * e_field * e_field
    }

    /// Cycle-averaged power (W) of a complex envelope amplitude.
    pub fn envelope_power(&self, amplitude: Complex64) -> f64 {
        0.5 * self.refractive_index * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * self.mode_area_m2 * amplitude.norm_sqr()
    }
}

/// Uniformly sampled time axis `t_k = t_start + k·dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAxis {
    pub t_start_s: f64,
    pub dt_s: f64,
    pub len: usize,
}

impl TimeAxis {
    pub fn time(&self, k: usize) -> f64 {
        self.t_start_s + k as f64 * self.dt_s
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len.saturating_sub(1))
    }
}

/// Real, carrier-resolved electric field samples (V/m).
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub axis: TimeAxis,
    pub samples: Vec<f64>,
}

impl Waveform {
    pub fn zeros(axis: TimeAxis) -> Self {
        Waveform { axis, samples: vec![0.0; axis.len] }
    }

    /// Energy (J) carried through the launch cross-section.
    pub fn energy(&self, launch: &Launch) -> f64 {
        self.samples.iter().map(|&e| launch.power(e)).sum::<f64>() * self.axis.dt_s
    }

    /// Field at an arbitrary time by cubic (Catmull-Rom) interpolation; zero
    /// outside the sampled range.
    pub fn sample_at(&self, t: f64) -> f64 {
        let x = (t - self.axis.t_start_s) / self.axis.dt_s;
        let n = self.samples.len() as isize;
        if !(x > -1.0 && x < n as f64) {
            return 0.0;
        }
        let i = x.floor() as isize;
        let f = x - i as f64;
        let at = |j: isize| -> f64 {
            if (0..n).contains(&j) {
                self.samples[j as usize]
            } else {
                0.0
            }
        };
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)))
    }
}

/// Peak field amplitude (V/m) of a transform-limited Gaussian carrying `spec.energy_j`.
pub fn peak_field(spec: &PulseSpec, launch: &Launch) -> f64 {
    let denom = 0.5
        * launch.refractive_index
        * VACUUM_PERMITTIVITY
        * SPEED_OF_LIGHT
        * launch.mode_area_m2
        * spec.fwhm_s
        * gaussian_area_factor();
    (spec.energy_j / denom).sqrt()
}

/// Fraction of a Gaussian intensity envelope centered at `peak` that falls
/// outside `[t_lo, t_hi]`.
fn clipped_fraction(spec: &PulseSpec, peak: f64, t_lo: f64, t_hi: f64) -> f64 {
    let sigma = spec.intensity_sigma();
    let tail = |x: f64| 0.5 * erfc(x / (sigma * 2f64.sqrt()));
    tail(peak - t_lo) + tail(t_hi - peak)
}

/// Complementary error function (Numerical Recipes `erfcc`, |rel err| < 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Transform-limited pulse evaluated directly in the time domain.
fn direct_waveform(spec: &PulseSpec, launch: &Launch, axis: TimeAxis, peak_time_s: f64) -> Waveform {
    let e0 = peak_field(spec, launch);
    let omega = spec.carrier_omega();
    let a = 2.0 * LN_2 / (spec.fwhm_s * spec.fwhm_s);
    let samples = (0..axis.len)
        .map(|k| {
            let t = axis.time(k) - peak_time_s;
            e0 * (-a * t * t).exp() * (omega * t + spec.carrier_phase_rad).cos()
        })
        .collect();
    Waveform { axis, samples }
}

/// Synthesizes a single pulse peaking at `peak_time_s` on `axis`.
///
/// Unshaped pulses are evaluated directly; shaped ones are built on a padded
/// private window, phase-masked in the frequency domain and cropped back.
pub fn synthesize(spec: &PulseSpec, launch: &Launch, axis: TimeAxis, peak_time_s: f64) -> Result<Waveform> {
    spec.validate("pulse")?;
    if axis.len < 2 || !(axis.dt_s > 0.0) {
        return Err(Error::validation("time axis needs dt > 0 and at least two samples"));
    }
    if !spec.is_shaped() {
        let clipped = clipped_fraction(spec, peak_time_s, axis.t_start_s, axis.t_end());
        if clipped > MAX_CLIPPED_FRACTION {
            return Err(Error::EnvelopeTruncation { clipped });
        }
        return Ok(direct_waveform(spec, launch, axis, peak_time_s));
    }

    // Private window aligned with `axis`, padded by the shaped duration bound.
    let stretch = chirp_stretch(spec);
    let half_width = 4.0 * spec.fwhm_s * stretch + 12.0 * spec.intensity_sigma() * stretch;
    let k_lo = ((peak_time_s - half_width - axis.t_start_s) / axis.dt_s).floor() as i64;
    let k_hi = ((peak_time_s + half_width - axis.t_start_s) / axis.dt_s).ceil() as i64;
    let private_axis = TimeAxis {
        t_start_s: axis.t_start_s + k_lo as f64 * axis.dt_s,
        dt_s: axis.dt_s,
        len: (k_hi - k_lo + 1) as usize,
    };
    let base = direct_waveform(spec, launch, private_axis, peak_time_s);
    let shaped = apply_phase_mask(&base, &spec.spectral_phase_coeffs, spec.carrier_omega())?;

    let total: f64 = shaped.samples.iter().map(|e| e * e).sum();
    let mut out = Waveform::zeros(axis);
    let mut kept = 0.0;
    for (j, &e) in shaped.samples.iter().enumerate() {
        let k = k_lo + j as i64;
        if (0..axis.len as i64).contains(&k) {
            out.samples[k as usize] = e;
            kept += e * e;
        }
    }
    let clipped = if total > 0.0 { 1.0 - kept / total } else { 0.0 };
    if clipped > MAX_CLIPPED_FRACTION {
        return Err(Error::EnvelopeTruncation { clipped });
    }
    Ok(out)
}

/// Upper bound on the duration stretch caused by the quadratic and linear
/// spectral phase terms, used to size shaping windows.
pub fn chirp_stretch(spec: &PulseSpec) -> f64 {
    let t0 = spec.fwhm_s / (2.0 * LN_2.sqrt());
    let gdd = 2.0 * spec.spectral_phase_coeffs.get(2).copied().unwrap_or(0.0);
    let shift = spec.spectral_phase_coeffs.get(1).copied().unwrap_or(0.0).abs();
    let higher: f64 =
        spec.spectral_phase_coeffs.iter().enumerate().skip(3).map(|(k, c)| c.abs() * (4.0 / t0).powi(k as i32)).sum();
    (1.0 + (gdd / (t0 * t0)).powi(2)).sqrt() + shift / spec.fwhm_s + higher
}

/// Multiplies the spectrum by `exp(i Σ c_k (ω-ω₀)^k)` (positive frequencies;
/// negative ones get the conjugate so the field stays real).
///
/// With the `exp(-iωt)` time dependence a positive linear coefficient `c₁`
/// delays the pulse by `c₁` seconds.
pub fn apply_phase_mask(waveform: &Waveform, coeffs: &[f64], omega0: f64) -> Result<Waveform> {
    validate_window(waveform)?;
    if coeffs.iter().all(|&c| c == 0.0) {
        return Ok(waveform.clone());
    }
    let n = waveform.samples.len();
    let dt = waveform.axis.dt_s;
    let mut buf: Vec<Complex64> = waveform.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spectral::forward(&mut buf);
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == half) {
            continue;
        }
        let omega = spectral::bin_frequency(k, n, dt);
        let detuning = omega.abs() - omega0;
        let phase: f64 = coeffs.iter().rev().fold(0.0, |acc, &c| acc * detuning + c);
        // rustfft's forward kernel is exp(-iωt): the physical spectrum at +ω is
        // the conjugate of bin k, hence the sign flip on positive frequencies.
        let rot = Complex64::from_polar(1.0, if omega > 0.0 { -phase } else { phase });
        *v *= rot;
    }
    spectral::inverse(&mut buf);
    Ok(Waveform { axis: waveform.axis, samples: buf.into_iter().map(|c| c.re).collect() })
}

/// Checks that the pulse sits at least four durations away from both window edges.
fn validate_window(waveform: &Waveform) -> Result<()> {
    let dt = waveform.axis.dt_s;
    let (mut w, mut wt, mut wt2) = (0.0, 0.0, 0.0);
    for (k, &e) in waveform.samples.iter().enumerate() {
        let t = k as f64 * dt;
        let p = e * e;
        w += p;
        wt += p * t;
        wt2 += p * t * t;
    }
    if w == 0.0 {
        return Ok(());
    }
    let mean = wt / w;
    let sigma = (wt2 / w - mean * mean).max(0.0).sqrt();
    let duration = 2.0 * (2.0 * LN_2).sqrt() * sigma;
    let span = (waveform.samples.len().saturating_sub(1)) as f64 * dt;
    if mean < 4.0 * duration || span - mean < 4.0 * duration {
        return Err(Error::validation(format!(
            "phase-mask window too tight: pulse of duration {:.1} fs needs >= 4 durations of padding on each side",
            duration * 1e15
        )));
    }
    Ok(())
}

/// Pump at `pump_peak_s` plus the probe delayed by `delay_s`; the delay shifts
/// the whole carrier-resolved probe so its carrier phase relative to the pump
/// advances by `ω₀·delay`.
pub fn compose_pair(
    pump: &PulseSpec,
    probe: &PulseSpec,
    delay_s: f64,
    launch: &Launch,
    axis: TimeAxis,
    pump_peak_s: f64,
) -> Result<Waveform> {
    pump.validate("pump")?;
    probe.validate("probe")?;
    let overlap = envelope_overlap(pump, probe, delay_s, axis.dt_s)?;
    if overlap > MAX_ENVELOPE_OVERLAP {
        return Err(Error::PulseOverlap { overlap, limit: MAX_ENVELOPE_OVERLAP });
    }
    let first = synthesize(pump, launch, axis, pump_peak_s)?;
    let second = synthesize(probe, launch, axis, pump_peak_s + delay_s)?;
    let samples = first.samples.iter().zip(&second.samples).map(|(a, b)| a + b).collect();
    Ok(Waveform { axis, samples })
}

/// `∫|a₁||a₂| / sqrt(∫|a₁|² ∫|a₂|²)` for the complex envelopes of the two pulses
/// separated by `delay_s`.
pub fn envelope_overlap(pump: &PulseSpec, probe: &PulseSpec, delay_s: f64, dt_s: f64) -> Result<f64> {
    let reach = |p: &PulseSpec| 8.0 * p.fwhm_s * chirp_stretch(p);
    let t_lo = -reach(pump).max(reach(probe));
    let t_hi = delay_s.max(0.0) + reach(pump).max(reach(probe));
    let len = ((t_hi - t_lo) / dt_s).ceil() as usize + 1;
    let axis = TimeAxis { t_start_s: t_lo, dt_s, len };
    let unit = Launch { mode_area_m2: 1.0, refractive_index: 1.0 };
    let env = |spec: &PulseSpec, peak: f64| -> Result<Vec<f64>> {
        let unit_energy = PulseSpec { energy_j: 1.0, ..spec.clone() };
        let w = synthesize(&unit_energy, &unit, axis, peak)?;
        Ok(spectral::analytic_signal(&w.samples).iter().map(|c| c.norm()).collect())
    };
    let a1 = env(pump, 0.0)?;
    let a2 = env(probe, delay_s)?;
    let cross: f64 = a1.iter().zip(&a2).map(|(x, y)| x * y).sum();
    let n1: f64 = a1.iter().map(|x| x * x).sum();
    let n2: f64 = a2.iter().map(|x| x * x).sum();
    Ok(cross / (n1 * n2).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanPlan {
    pub nominal_delays_s: Vec<f64>,
    pub fine_span_s: f64,
    pub fine_step_s: f64,
}

impl Default for ScanPlan {
    fn default() -> Self {
        ScanPlan { nominal_delays_s: vec![600e-15, 650e-15, 750e-15, 900e-15], fine_span_s: 12e-15, fine_step_s: 1e-15 }
    }
}

impl ScanPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.fine_step_s > 0.0 && self.fine_step_s.is_finite()) {
            return Err(Error::validation(format!("scan.fine_step_s must be > 0, got {}", self.fine_step_s)));
        }
        if !(self.fine_span_s >= 0.0 && self.fine_span_s.is_finite()) {
            return Err(Error::validation("scan.fine_span_s must be >= 0"));
        }
        if self.nominal_delays_s.is_empty() {
            return Err(Error::validation("scan.nominal_delays_s must not be empty"));
        }
        if self.nominal_delays_s.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::validation("scan.nominal_delays_s must all be > 0"));
        }
        Ok(())
    }

    /// Number of fine steps per nominal delay (inclusive of both ends).
    pub fn fine_count(&self) -> usize {
        (self.fine_span_s / self.fine_step_s + 1e-9).floor() as usize + 1
    }
}

/// One planned propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedDelay {
    pub nominal_index: usize,
    pub nominal_s: f64,
    pub delay_s: f64,
}

impl PlannedDelay {
    /// Delay rounded to whole attoseconds, used for file naming.
    pub fn attoseconds(&self) -> i64 {
        (self.delay_s * 1e18).round() as i64
    }
}

/// Expands every nominal delay into `τ, τ+step, ..., τ+span`.
pub fn plan_scan(plan: &ScanPlan) -> Result<Vec<PlannedDelay>> {
    plan.validate()?;
    let count = plan.fine_count();
    Ok(plan
        .nominal_delays_s
        .iter()
        .enumerate()
        .flat_map(|(i, &nominal)| {
            (0..count).map(move |k| PlannedDelay {
                nominal_index: i,
                nominal_s: nominal,
                delay_s: nominal + k as f64 * plan.fine_step_s,
            })
        })
        .collect())
}
