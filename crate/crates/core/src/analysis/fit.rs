//! Least-squares fits for fringe series and visibility decay.
//!
//! Both models are linear in all but one parameter (period, decay time), so
//! the linear part is solved in closed form and the remaining scalar is found
//! by a dense scan followed by golden-section refinement.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scan density of the one-dimensional searches.
const SCAN_POINTS: usize = 2000;
const GOLDEN_ITERATIONS: usize = 200;

/// `y = amplitude·sin(2πx/period + phase) + offset + slope·(x - trend_origin)`.
///
/// `slope` is zero unless the fit included a linear trend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub amplitude: f64,
    pub period: f64,
    /// In `(-π, π]`.
    pub phase_rad: f64,
    pub offset: f64,
    pub slope: f64,
    /// Mean abscissa of the fitted samples.
    pub trend_origin: f64,
    pub residual_rms: f64,
    pub r_squared: f64,
}

impl SinusoidFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * (2.0 * PI * x / self.period + self.phase_rad).sin()
            + self.offset
            + self.slope * (x - self.trend_origin)
    }

    /// `(max - min)/(max + min)` of the fitted curve.
    pub fn visibility(&self) -> f64 {
        self.amplitude / self.offset
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Wraps a cycle count into `(-0.5, 0.5]`.
pub fn wrap_cycles(c: f64) -> f64 {
    wrap_phase(2.0 * PI * c) / (2.0 * PI)
}

fn r_squared(y: &[f64], ss_res: f64) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Least squares `y ≈ α sin + β cos + b + c·(x - x̄)` at fixed period, with
/// `c = 0` unless `trend` is set. Returns `[α, β, b, c]` and the residual sum of squares.
fn linear_sinusoid(x: &[f64], y: &[f64], period: f64, trend: bool) -> Option<([f64; 4], f64)> {
    let w = 2.0 * PI / period;
    let origin = mean(x);
    // The trend column is solved in units of the half span to keep the system balanced.
    let half_span = x.iter().fold(0.0_f64, |m, v| m.max((v - origin).abs()));
    let unit = if half_span > 0.0 { half_span } else { 1.0 };
    let n = if trend { 4 } else { 3 };
    let basis = |xi: f64| {
        let (s, c) = (w * xi).sin_cos();
        [s, c, 1.0, (xi - origin) / unit]
    };
    let mut m = [[0.0; 4]; 4];
    let mut r = [0.0; 4];
    for (&xi, &yi) in x.iter().zip(y) {
        let b = basis(xi);
        for i in 0..n {
            r[i] += b[i] * yi;
            for j in 0..n {
                m[i][j] += b[i] * b[j];
            }
        }
    }
    let mut coef = solve(m, r, n)?;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let b = basis(xi);
            (yi - (0..n).map(|k| coef[k] * b[k]).sum::<f64>()).powi(2)
        })
        .sum();
    coef[3] /= unit;
    Some((coef, ss))
}

/// Gaussian elimination on the leading `n×n` block; unused entries stay zero.
fn solve(mut m: [[f64; 4]; 4], mut r: [f64; 4], n: usize) -> Option<[f64; 4]> {
    let scale = m.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, pivot);
        r.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut out = [0.0; 4];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * out[k]).sum();
        out[row] = (r[row] - s) / m[row][row];
    }
    Some(out)
}

fn to_fit(coef: [f64; 4], ss: f64, period: f64, x: &[f64], y: &[f64]) -> SinusoidFit {
    SinusoidFit {
        amplitude: coef[0].hypot(coef[1]),
        period,
        phase_rad: wrap_phase(coef[1].atan2(coef[0])),
        offset: coef[2],
        slope: coef[3],
        trend_origin: mean(x),
        residual_rms: (ss / y.len() as f64).sqrt(),
        r_squared: r_squared(y, ss),
    }
}

/// Minimizes `f` over `[lo, hi]`: dense scan, then golden section around the best point.
fn scan_then_golden(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let f = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let step = scan_step(lo, hi);
    let mut best = (lo, f(lo));
    for k in 1..=SCAN_POINTS {
        let x = lo + step * k as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERATIONS {
        if (b - a).abs() <= 1e-12 * best.0.abs().max(step) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    if f(x) <= best.1 {
        x
    } else {
        best.0
    }
}

/// Refines a minimizer `x0` found by [`scan_then_golden`] with secant steps on
/// the analytic derivative `grad`. The objective is flat at the bottom, so the
/// golden-section result sits wherever rounding noise left it; the derivative
/// crosses zero steeply and pins the minimum to near machine precision.
fn polish(x0: f64, width: f64, grad: impl Fn(f64) -> Option<f64>) -> f64 {
    let (lo, hi) = (x0 - width, x0 + width);
    let mut a = x0;
    let mut b = x0 + 1e-3 * width;
    let (Some(mut ga), Some(mut gb)) = (grad(a), grad(b)) else {
        return x0;
    };
    // Near the root the derivative is pure rounding noise and secant steps
    // wander; keep the point where it was smallest.
    let mut best = if ga.abs() <= gb.abs() { (ga.abs(), a) } else { (gb.abs(), b) };
    for _ in 0..12 {
        if gb == ga {
            break;
        }
        let c = b - gb * (b - a) / (gb - ga);
        if !(c > lo && c < hi) {
            break;
        }
        let Some(gc) = grad(c) else {
            break;
        };
        if gc.abs() < best.0 {
            best = (gc.abs(), c);
        }
        (a, ga, b, gb) = (b, gb, c, gc);
        if (b - a).abs() <= 1e-15 * b.abs() {
            break;
        }
    }
    best.1
}

/// `d/dν Σ (y - fit)²` at the least-squares coefficients for frequency `nu`.
fn residual_gradient(x: &[f64], y: &[f64], nu: f64, trend: bool) -> Option<f64> {
    let (coef, _) = linear_sinusoid(x, y, 1.0 / nu, trend)?;
    let w = 2.0 * PI * nu;
    // Residuals are orthogonal to the basis, so the derivative may be taken
    // about the mean abscissa; this drops a large term that cancels only to
    // the accuracy of the linear solve.
    let mean = mean(x);
    Some(
        x.iter()
            .zip(y)
            .map(|(&xi, &yi)| {
                let (s, c) = (w * xi).sin_cos();
                let r = yi - (coef[0] * s + coef[1] * c + coef[2] + coef[3] * (xi - mean));
                -2.0 * r * 2.0 * PI * (xi - mean) * (coef[0] * c - coef[1] * s)
            })
            .sum(),
    )
}

fn scan_step(lo: f64, hi: f64) -> f64 {
    (hi - lo) / SCAN_POINTS as f64
}

fn check_series(x: &[f64], ys: &[&[f64]], min_len: usize) -> Result<()> {
    if x.len() < min_len {
        return Err(Error::validation(format!("fit needs at least {min_len} samples, got {}", x.len())));
    }
    if ys.iter().any(|y| y.len() != x.len()) {
        return Err(Error::validation("fit abscissa and ordinates differ in length"));
    }
    if x.iter().chain(ys.iter().flat_map(|y| y.iter())).any(|v| !v.is_finite()) {
        return Err(Error::validation("fit data contain non-finite values"));
    }
    Ok(())
}

/// Period search bounds: from the Nyquist limit of the sampling to twice the span.
fn period_bounds(x: &[f64]) -> (f64, f64) {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let span = sorted[sorted.len() - 1] - sorted[0];
    let min_step = sorted.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
    (2.0 * min_step, 2.0 * span)
}

/// Fits `y = a sin(2πx/T + φ) + b`; `period` fixes `T`, otherwise it is free.
pub fn fit_sinusoid(x: &[f64], y: &[f64], period: Option<f64>) -> Result<SinusoidFit> {
    check_series(x, &[y], 4)?;
    let period = match period {
        Some(p) if p > 0.0 && p.is_finite() => p,
        Some(p) => return Err(Error::validation(format!("fixed period must be positive, got {p}"))),
        None => {
            let (lo, hi) = period_bounds(x);
            // Search in frequency so the scan is uniform in fringe count.
            let nu = scan_then_golden(1.0 / hi, 1.0 / lo, |nu| {
                linear_sinusoid(x, y, 1.0 / nu, false).map_or(f64::INFINITY, |(_, ss)| ss)
            });
            1.0 / polish(nu, scan_step(1.0 / hi, 1.0 / lo), |nu| residual_gradient(x, y, nu, false))
        }
    };
    fit_at(x, y, period, false)
}

fn fit_at(x: &[f64], y: &[f64], period: f64, trend: bool) -> Result<SinusoidFit> {
    let (coef, ss) = linear_sinusoid(x, y, period, trend)
        .ok_or_else(|| Error::validation("sinusoid fit is singular at the chosen period"))?;
    Ok(to_fit(coef, ss, period, x, y))
}

/// Residual sum of squares of the non-oscillating part alone (constant, or line with `trend`).
fn baseline_ss(x: &[f64], y: &[f64], trend: bool) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss = if trend {
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        if sxx > 0.0 {
            ss_tot - sxy * sxy / sxx
        } else {
            ss_tot
        }
    } else {
        ss_tot
    };
    ss.max(f64::MIN_POSITIVE)
}

/// Fits two series with one shared free period, each weighted by the variance
/// left after removing its baseline. `trend[i]` adds a linear trend to series `i`.
pub fn fit_shared_period(x: &[f64], a: &[f64], b: &[f64], trend: [bool; 2]) -> Result<(SinusoidFit, SinusoidFit)> {
    check_series(x, &[a, b], 5)?;
    let (va, vb) = (baseline_ss(x, a, trend[0]), baseline_ss(x, b, trend[1]));
    let (lo, hi) = period_bounds(x);
    let nu = scan_then_golden(1.0 / hi, 1.0 / lo, |nu| {
        let p = 1.0 / nu;
        match (linear_sinusoid(x, a, p, trend[0]), linear_sinusoid(x, b, p, trend[1])) {
            (Some((_, sa)), Some((_, sb))) => sa / va + sb / vb,
            _ => f64::INFINITY,
        }
    });
    let nu = polish(nu, scan_step(1.0 / hi, 1.0 / lo), |nu| {
        Some(residual_gradient(x, a, nu, trend[0])? / va + residual_gradient(x, b, nu, trend[1])? / vb)
    });
    Ok((fit_at(x, a, 1.0 / nu, trend[0])?, fit_at(x, b, 1.0 / nu, trend[1])?))
}

/// Fringe observables at one nominal delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeSeries {
    pub visibility: f64,
    pub period_s: f64,
    pub intensity: SinusoidFit,
    pub separation: SinusoidFit,
    /// `(φ_int - φ_sep)/2π` wrapped into `(-0.5, 0.5]`; positive when the separation lags.
    pub lag_cycles: f64,
    /// The intensity amplitude is indistinguishable from the fit residual.
    pub fringe_free: bool,
}

/// Noise floor below which a fitted amplitude counts as absent.
fn amplitude_floor(fit: &SinusoidFit, n: usize) -> f64 {
    (3.0 * fit.residual_rms * (2.0 / n as f64).sqrt()).max(1e-9 * fit.offset.abs())
}

pub fn is_fringe_free(fit: &SinusoidFit, n: usize) -> bool {
    fit.amplitude <= amplitude_floor(fit, n)
}

/// Joint fit of probe peak intensity and pump-probe separation versus fine delay.
pub fn fringe_series(delays_s: &[f64], probe_peak_w: &[f64], separation_s: &[f64]) -> Result<FringeSeries> {
    if delays_s.len() < 8 {
        return Err(Error::validation(format!("fringe series needs at least 8 fine delays, got {}", delays_s.len())));
    }
    // The separation follows the delay stage one for one, so its fit carries a linear trend.
    let (intensity, separation) = fit_shared_period(delays_s, probe_peak_w, separation_s, [false, true])?;
    Ok(FringeSeries {
        visibility: intensity.visibility(),
        period_s: intensity.period,
        lag_cycles: wrap_cycles((intensity.phase_rad - separation.phase_rad) / (2.0 * PI)),
        fringe_free: is_fringe_free(&intensity, delays_s.len()),
        intensity,
        separation,
    })
}

/// `V(τ) = amplitude · exp(-τ/t_coh)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceFit {
    pub t_coh_s: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    pub delays_s: Vec<f64>,
    pub visibilities: Vec<f64>,
    /// The best decay time sits on the upper search bound: the data do not decay.
    pub non_decaying: bool,
}

/// Upper search bound on the decay time, in units of the largest delay.
const MAX_DECAY_RATIO: f64 = 1e4;

pub fn fit_coherence(delays_s: &[f64], visibilities: &[f64]) -> Result<CoherenceFit> {
    check_series(delays_s, &[visibilities], 3)?;
    let tau_max = delays_s.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if tau_max <= 0.0 {
        return Err(Error::validation("coherence fit needs a positive delay"));
    }
    let solve = |t: f64| {
        let (mut ve, mut ee) = (0.0, 0.0);
        for (&d, &v) in delays_s.iter().zip(visibilities) {
            let e = (-d / t).exp();
            ve += v * e;
            ee += e * e;
        }
        let a = ve / ee;
        let ss: f64 = delays_s.iter().zip(visibilities).map(|(&d, &v)| (v - a * (-d / t).exp()).powi(2)).sum();
        (a, ss)
    };
    // Log-uniform search over the decay time.
    let (lo, hi) = ((tau_max * 1e-3).ln(), (tau_max * MAX_DECAY_RATIO).ln());
    let best = scan_then_golden(lo, hi, |u| solve(u.exp()).1);
    let t_coh = best.exp();
    let (amplitude, ss) = solve(t_coh);
    Ok(CoherenceFit {
        t_coh_s: t_coh,
        amplitude,
        r_squared: r_squared(visibilities, ss),
        delays_s: delays_s.to_vec(),
        visibilities: visibilities.to_vec(),
        non_decaying: best >= hi - 1e-3 * (hi - lo),
    })
}
