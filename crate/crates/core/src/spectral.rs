//! FFT helpers shared by pulse shaping and analysis.
//!
//! Frequency bin `k` of an `n`-point transform sampled every `dt` maps to the
//! angular frequency `2πk/(n·dt)` for `k < n/2` and to `2π(k-n)/(n·dt)` above.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

pub fn bin_frequency(k: usize, n: usize, dt: f64) -> f64 {
    let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * k / (n as f64 * dt)
}

pub fn forward(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

/// Inverse transform including the `1/n` normalization.
pub fn inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Analytic signal `x + i·H[x]` of a real record.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if n < 2 {
        return buf;
    }
    forward(&mut buf);
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        let even_nyquist = n % 2 == 0 && k == half;
        if k == 0 || even_nyquist {
            continue;
        } else if k < n.div_ceil(2) {
            *v *= 2.0;
        } else {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    inverse(&mut buf);
    buf
}
