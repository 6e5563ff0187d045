//! Cross-correlation FROG spectrograms of demodulated envelopes.

use num_complex::Complex64;

use crate::dump::{DumpKind, Matrix};
use crate::error::{Error, Result};
use crate::spectral;

use super::envelope::Envelope;

/// `S(τ, ω) = |∫ s(t) g(t - τ) e^{-i(ω-ω₀)t} dt|²` on a `delays × frequencies` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub delays_s: Vec<f64>,
    /// Absolute angular frequencies (carrier included).
    pub omegas: Vec<f64>,
    /// Row-major `[delay][frequency]`.
    pub data: Vec<f64>,
}

impl Spectrogram {
    pub fn rows(&self) -> usize {
        self.delays_s.len()
    }

    pub fn cols(&self) -> usize {
        self.omegas.len()
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols() + col]
    }

    pub fn d_omega(&self) -> f64 {
        if self.omegas.len() > 1 {
            self.omegas[1] - self.omegas[0]
        } else {
            0.0
        }
    }

    /// `∫ S dω/2π` per delay; equals `∫|s(t)|²|g(t-τ)|² dt` when the band covers the signal.
    pub fn time_marginal(&self) -> Vec<f64> {
        let scale = self.d_omega() / (2.0 * std::f64::consts::PI);
        self.data.chunks(self.cols()).map(|row| row.iter().sum::<f64>() * scale).collect()
    }

    /// Spectrogram-weighted mean `(delay, ω)` and their covariance.
    pub fn moments(&self) -> (f64, f64, f64) {
        let (mut w, mut wt, mut wo) = (0.0, 0.0, 0.0);
        for (r, row) in self.data.chunks(self.cols()).enumerate() {
            for (c, &v) in row.iter().enumerate() {
                w += v;
                wt += v * self.delays_s[r];
                wo += v * self.omegas[c];
            }
        }
        let (mt, mo) = (wt / w, wo / w);
        let mut cov = 0.0;
        for (r, row) in self.data.chunks(self.cols()).enumerate() {
            for (c, &v) in row.iter().enumerate() {
                cov += v * (self.delays_s[r] - mt) * (self.omegas[c] - mo);
            }
        }
        (mt, mo, cov / w)
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            kind: DumpKind::Spectrogram,
            rows: self.rows(),
            cols: self.cols(),
            row_step: if self.rows() > 1 { self.delays_s[1] - self.delays_s[0] } else { 0.0 },
            col_step: self.d_omega(),
            row_origin: self.delays_s.first().copied().unwrap_or(0.0),
            col_origin: self.omegas.first().copied().unwrap_or(0.0),
            data: self.data.clone(),
        }
    }
}

/// Gates `signal` with `reference` shifted so its intensity centroid sits on
/// each of `time_bins` delays spread evenly over the signal record, and keeps
/// the `freq_bins` transform bins nearest the carrier.
pub fn xfrog_trace(signal: &Envelope, reference: &Envelope, freq_bins: usize, time_bins: usize) -> Result<Spectrogram> {
    if freq_bins == 0 || time_bins == 0 {
        return Err(Error::validation("spectrogram needs at least one time and one frequency bin"));
    }
    if (signal.axis.dt_s - reference.axis.dt_s).abs() > 1e-9 * signal.axis.dt_s {
        return Err(Error::validation("signal and reference must share a sampling step"));
    }
    let n = signal.len();
    // Zero padding refines the frequency grid when the record is short.
    let fft_len = n.max(freq_bins).next_power_of_two();
    let dt = signal.axis.dt_s;
    let ref_center = reference.centroid(0..reference.len());
    let t0 = signal.axis.t_start_s;
    let t1 = signal.axis.t_end();
    let delays_s: Vec<f64> = if time_bins == 1 {
        vec![0.5 * (t0 + t1)]
    } else {
        (0..time_bins).map(|k| t0 + (t1 - t0) * k as f64 / (time_bins - 1) as f64).collect()
    };

    let half = (freq_bins / 2) as isize;
    let offsets: Vec<isize> = (0..freq_bins as isize).map(|c| c - half).collect();
    let d_omega = 2.0 * std::f64::consts::PI / (fft_len as f64 * dt);
    let omegas = offsets.iter().map(|&o| signal.omega0 + o as f64 * d_omega).collect();

    let gate = |t: f64| -> Complex64 {
        let x = (t - reference.axis.t_start_s) / reference.axis.dt_s;
        if x < 0.0 || x > (reference.len() - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let k = (x.floor() as usize).min(reference.len() - 2);
        let f = x - k as f64;
        reference.amplitude[k] * (1.0 - f) + reference.amplitude[k + 1] * f
    };

    let mut data = Vec::with_capacity(time_bins * freq_bins);
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
    for &delay in &delays_s {
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (k, slot) in buf.iter_mut().take(n).enumerate() {
            let t = signal.t_s(k);
            *slot = signal.amplitude[k] * gate(t - delay + ref_center);
        }
        spectral::forward(&mut buf);
        for &o in &offsets {
            let idx = o.rem_euclid(fft_len as isize) as usize;
            // Phase reference at t0 does not affect |·|².
            data.push(buf[idx].norm_sqr() * dt * dt);
        }
    }
    Ok(Spectrogram { delays_s, omegas, data })
}
