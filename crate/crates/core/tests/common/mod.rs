//! Shared oracles for the integration suites.

#![allow(dead_code)]

use qdsoa_ramsey::constants::HBAR;
use qdsoa_ramsey::medium::{MediumSpec, RateConstants};

/// Adaptive Dormand-Prince 5(4) integration of `dy/dt = f(t, y)` from `t0` to `t1`.
pub fn dopri5(
    f: impl Fn(f64, &[f64], &mut [f64]),
    t0: f64,
    t1: f64,
    y0: &[f64],
    rtol: f64,
    atol: f64,
    h0: f64,
) -> Vec<f64> {
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] =
        [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut h = h0;
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        for s in 0..7 {
            for i in 0..n {
                tmp[i] = y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
            }
            f(t + C[s] * h, &tmp, &mut k[s]);
        }
        let mut err: f64 = 0.0;
        let mut y5 = vec![0.0; n];
        for i in 0..n {
            y5[i] = y[i] + h * (0..7).map(|s| B5[s] * k[s][i]).sum::<f64>();
            let y4 = y[i] + h * (0..7).map(|s| B4[s] * k[s][i]).sum::<f64>();
            let sc = atol + rtol * y[i].abs().max(y5[i].abs());
            err = err.max(((y5[i] - y4) / sc).abs());
        }
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    y
}

/// State `[Re ρ_eg, Im ρ_eg, ρ_ee, ρ_es, ρ_res]` of one dot.
pub struct BlochOracle {
    pub omega: f64,
    pub gamma: f64,
    pub coupling: f64,
    pub rates: RateConstants,
}

impl BlochOracle {
    pub fn new(medium: &MediumSpec, dipole_cm: f64, omega: f64) -> Self {
        BlochOracle { omega, gamma: medium.dephasing_rate(), coupling: dipole_cm / HBAR, rates: medium.rates() }
    }

    pub fn rhs(&self, e: f64, y: &[f64], dy: &mut [f64]) {
        let (x, im, ee, es, res) = (y[0], y[1], y[2], y[3], y[4]);
        let drive = self.coupling * e;
        let w = 2.0 * ee - 1.0;
        let r = &self.rates;
        let capture = res * (1.0 - es) / r.tau_capture;
        let relax = es * (1.0 - ee) / r.tau_relax;
        dy[0] = -self.gamma * x + self.omega * im;
        dy[1] = -self.omega * x - self.gamma * im - drive * w;
        dy[2] = 2.0 * drive * im + relax - ee / r.tau_recomb;
        dy[3] = capture - relax - es / r.tau_recomb;
        dy[4] = r.pump_rate * (1.0 - res) - capture - res / r.tau_recomb;
    }

    /// Integrates under the field `e(t)` from `t0` to `t1`.
    pub fn run(&self, e: impl Fn(f64) -> f64, y0: [f64; 5], t0: f64, t1: f64) -> [f64; 5] {
        let period = 2.0 * std::f64::consts::PI / self.omega;
        let y = dopri5(|t, y, dy| self.rhs(e(t), y, dy), t0, t1, &y0, 1e-11, 1e-13, period / 100.0);
        [y[0], y[1], y[2], y[3], y[4]]
    }
}

/// Relative deviation `|a - b| / |b|`.
pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
