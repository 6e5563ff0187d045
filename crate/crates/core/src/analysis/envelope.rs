//! Quadrature demodulation of carrier-resolved records into complex envelopes,
//! instantaneous frequency, and pump/probe windows.

use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pulse::{Launch, TimeAxis};
use crate::spectral;

/// Instantaneous frequency is reported only above this fraction of peak intensity.
pub const INST_FREQ_MASK: f64 = 0.01;

/// Peaks below this fraction of the record maximum are ignored by the window split.
pub const PEAK_THRESHOLD: f64 = 0.05;

/// Low-pass cutoff for a Gaussian pulse of the given intensity FWHM: three
/// times its spectral FWHM in angular units.
pub fn default_cutoff(fwhm_s: f64) -> f64 {
    3.0 * 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::LN_2 / std::f64::consts::PI) / fwhm_s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemodOptions {
    pub omega0: f64,
    pub cutoff_rad_per_s: f64,
    pub launch: Launch,
    /// Minimum time between the two peaks used to split the windows.
    pub min_peak_separation_s: f64,
}

/// Baseband view of a record: `E(t) = Re[a(t) e^{iω₀t}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub axis: TimeAxis,
    pub omega0: f64,
    pub amplitude: Vec<Complex64>,
    /// Cycle-averaged power (W).
    pub intensity_w: Vec<f64>,
    /// `NaN` where the intensity is below [`INST_FREQ_MASK`] of the maximum.
    pub inst_freq_rad_per_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeRecord {
    pub envelope: Envelope,
    pub pump_window: Range<usize>,
    pub probe_window: Range<usize>,
}

impl Envelope {
    pub fn t_s(&self, k: usize) -> f64 {
        self.axis.time(k)
    }

    pub fn len(&self) -> usize {
        self.amplitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitude.is_empty()
    }

    /// Keeps every `stride`-th sample.
    pub fn decimate(&self, stride: usize) -> Envelope {
        let stride = stride.max(1);
        let pick = |v: &Vec<f64>| v.iter().step_by(stride).copied().collect::<Vec<_>>();
        Envelope {
            axis: TimeAxis {
                t_start_s: self.axis.t_start_s,
                dt_s: self.axis.dt_s * stride as f64,
                len: self.len().div_ceil(stride),
            },
            omega0: self.omega0,
            amplitude: self.amplitude.iter().step_by(stride).copied().collect(),
            intensity_w: pick(&self.intensity_w),
            inst_freq_rad_per_s: pick(&self.inst_freq_rad_per_s),
        }
    }

    /// Intensity FWHM (s) of the pulse containing sample `peak`, with linear
    /// interpolation of the half-maximum crossings.
    pub fn fwhm_around(&self, peak: usize) -> f64 {
        let half = 0.5 * self.intensity_w[peak];
        let i = &self.intensity_w;
        let mut lo = peak;
        while lo > 0 && i[lo] > half {
            lo -= 1;
        }
        let mut hi = peak;
        while hi + 1 < i.len() && i[hi] > half {
            hi += 1;
        }
        let cross = |a: usize, b: usize| a as f64 + (half - i[a]) / (i[b] - i[a]) * (b as f64 - a as f64);
        let t_lo = if lo < peak { cross(lo, lo + 1) } else { lo as f64 };
        let t_hi = if hi > peak { cross(hi - 1, hi) } else { hi as f64 };
        (t_hi - t_lo) * self.axis.dt_s
    }

    /// Index of the largest intensity sample in `range`.
    pub fn argmax(&self, range: Range<usize>) -> usize {
        let mut best = range.start;
        for k in range {
            if self.intensity_w[k] > self.intensity_w[best] {
                best = k;
            }
        }
        best
    }

    /// Sub-sample peak `(time, value)` near sample `k` by a parabola through its neighbours.
    pub fn refined_peak(&self, k: usize) -> (f64, f64) {
        let i = &self.intensity_w;
        if k == 0 || k + 1 >= i.len() {
            return (self.t_s(k), i[k]);
        }
        let (a, b, c) = (i[k - 1], i[k], i[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom >= 0.0 {
            return (self.t_s(k), b);
        }
        let delta = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        (self.t_s(k) + delta * self.axis.dt_s, b - 0.25 * (a - c) * delta)
    }

    /// Linearly interpolated instantaneous frequency at time `t`.
    pub fn inst_freq_at(&self, t: f64) -> f64 {
        let x = (t - self.axis.t_start_s) / self.axis.dt_s;
        let k = x.floor();
        if k < 0.0 || k as usize + 1 >= self.len() {
            return f64::NAN;
        }
        let (k, f) = (k as usize, x - k);
        (1.0 - f) * self.inst_freq_rad_per_s[k] + f * self.inst_freq_rad_per_s[k + 1]
    }

    /// Energy (J) over a sample range.
    pub fn energy(&self, range: Range<usize>) -> f64 {
        self.intensity_w[range].iter().sum::<f64>() * self.axis.dt_s
    }

    /// Intensity-weighted mean time over a sample range.
    pub fn centroid(&self, range: Range<usize>) -> f64 {
        let (mut w, mut wt) = (0.0, 0.0);
        for k in range {
            w += self.intensity_w[k];
            wt += self.intensity_w[k] * self.t_s(k);
        }
        wt / w
    }
}

/// Complex envelope by mixing with `e^{-iω₀t}` and low-pass filtering at
/// `cutoff` (raised-cosine roll-off over the last 20 % of the band).
pub fn analytic_envelope(
    samples: &[f64],
    axis: TimeAxis,
    omega0: f64,
    cutoff: f64,
    launch: &Launch,
) -> Result<Envelope> {
    if samples.len() != axis.len || samples.len() < 3 {
        return Err(Error::validation("record length must match its time axis and exceed two samples"));
    }
    let samples_per_cycle = 2.0 * std::f64::consts::PI / (omega0 * axis.dt_s);
    if samples_per_cycle < 25.0 {
        return Err(Error::validation(format!(
            "record has {samples_per_cycle:.1} samples per carrier cycle; at least 25 are required"
        )));
    }
    let n = samples.len();
    let mut buf: Vec<Complex64> =
        samples.iter().enumerate().map(|(k, &e)| Complex64::from_polar(2.0 * e, -omega0 * axis.time(k))).collect();
    spectral::forward(&mut buf);
    let knee = 0.8 * cutoff;
    for (k, v) in buf.iter_mut().enumerate() {
        let w = spectral::bin_frequency(k, n, axis.dt_s).abs();
        let gain = if w <= knee {
            1.0
        } else if w >= cutoff {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * (w - knee) / (cutoff - knee)).cos())
        };
        *v *= gain;
    }
    spectral::inverse(&mut buf);

    let intensity_w: Vec<f64> = buf.iter().map(|&a| launch.envelope_power(a)).collect();
    let peak = intensity_w.iter().fold(0.0_f64, |m, &v| m.max(v));
    let mut inst = vec![f64::NAN; n];
    for k in 1..n - 1 {
        if peak > 0.0 && intensity_w[k] > INST_FREQ_MASK * peak {
            let dphi = (buf[k + 1] * buf[k - 1].conj()).arg();
            inst[k] = omega0 + dphi / (2.0 * axis.dt_s);
        }
    }
    Ok(Envelope { axis, omega0, amplitude: buf, intensity_w, inst_freq_rad_per_s: inst })
}

/// Demodulates a two-pulse record and splits it into pump and probe windows
/// at the intensity minimum between the two dominant peaks.
pub fn demodulate(samples: &[f64], axis: TimeAxis, options: &DemodOptions) -> Result<EnvelopeRecord> {
    let envelope = analytic_envelope(samples, axis, options.omega0, options.cutoff_rad_per_s, &options.launch)?;
    let (pump_window, probe_window) = split_windows(&envelope, options.min_peak_separation_s)?;
    Ok(EnvelopeRecord { envelope, pump_window, probe_window })
}

fn split_windows(env: &Envelope, min_separation_s: f64) -> Result<(Range<usize>, Range<usize>)> {
    let i = &env.intensity_w;
    let n = i.len();
    let max = i.iter().fold(0.0_f64, |m, &v| m.max(v));
    if max <= 0.0 {
        return Err(Error::WindowSplit("record carries no field".into()));
    }
    let peaks: Vec<usize> =
        (1..n - 1).filter(|&k| i[k] > i[k - 1] && i[k] >= i[k + 1] && i[k] >= PEAK_THRESHOLD * max).collect();
    let first = *peaks
        .iter()
        .max_by(|&&a, &&b| i[a].total_cmp(&i[b]))
        .ok_or_else(|| Error::WindowSplit("no peak above threshold".into()))?;
    let min_gap = (min_separation_s / env.axis.dt_s).max(1.0);
    let second = peaks
        .iter()
        .copied()
        .filter(|&k| (k as f64 - first as f64).abs() >= min_gap)
        .max_by(|&a, &b| i[a].total_cmp(&i[b]))
        .ok_or_else(|| {
            Error::WindowSplit(format!("fewer than two peaks exceed {:.0}% of the maximum", PEAK_THRESHOLD * 100.0))
        })?;
    let (a, b) = if first < second { (first, second) } else { (second, first) };
    let split = (a..=b).min_by(|&x, &y| i[x].total_cmp(&i[y])).unwrap_or((a + b) / 2);
    Ok((0..split, split..n))
}
