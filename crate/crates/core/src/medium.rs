//! Amplifier medium and the discretized, inhomogeneously broadened dot ensemble.
//!
//! Each dot is an effective two-level emitter (ground `g`, excited `e`) fed
//! incoherently through a per-dot excited state (`es`) from a carrier
//! reservoir (`res`). The valence side is folded into the two-level pair, so
//! `rho_gg = 1 - rho_ee` at all times.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{angular_frequency, ev_to_angular_frequency, HBAR, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};

/// Modal gain contributed by one dot layer at line center (1/m).
pub const MODAL_GAIN_PER_LAYER_PER_M: f64 = 1500.0;

/// Pre-pulse line-center inversion used to derive the default pump rate.
pub const DEFAULT_STEADY_STATE_INVERSION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumSpec {
    pub length_m: f64,
    pub background_index: f64,
    pub dot_sheet_density_per_m2: f64,
    pub num_layers: u32,
    /// Effective modal height converting stacked sheet densities into a
    /// volumetric density seen by the guided mode.
    pub mode_height_m: f64,
    pub modal_gain_peak_per_m: f64,
    pub pump_rate_per_s: f64,
    pub tau_res_to_es_s: f64,
    pub tau_es_to_gs_s: f64,
    pub tau_recomb_s: f64,
    pub t2_s: f64,
    pub tpa_coeff_m_per_w: f64,
    pub kerr_index_m2_per_w: f64,
    /// Kept for documentation; propagation is single pass.
    pub facet_reflectivity: f64,
}

impl Default for MediumSpec {
    fn default() -> Self {
        let num_layers = 6;
        let mut spec = MediumSpec {
            length_m: 100e-6,
            background_index: 3.5,
            dot_sheet_density_per_m2: 6e14,
            num_layers,
            mode_height_m: 0.5e-6,
            modal_gain_peak_per_m: num_layers as f64 * MODAL_GAIN_PER_LAYER_PER_M,
            pump_rate_per_s: 0.0,
            tau_res_to_es_s: 2e-12,
            tau_es_to_gs_s: 1e-12,
            tau_recomb_s: 200e-12,
            t2_s: 340e-15,
            tpa_coeff_m_per_w: 0.0,
            kerr_index_m2_per_w: 0.0,
            facet_reflectivity: 1e-4,
        };
        spec.pump_rate_per_s = spec
            .rates()
            .pump_rate_for_inversion(DEFAULT_STEADY_STATE_INVERSION)
            .expect("default rate constants admit the default inversion");
        spec
    }
}

impl MediumSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("medium.length_m", self.length_m),
            ("medium.dot_sheet_density_per_m2", self.dot_sheet_density_per_m2),
            ("medium.mode_height_m", self.mode_height_m),
            ("medium.tau_res_to_es_s", self.tau_res_to_es_s),
            ("medium.tau_es_to_gs_s", self.tau_es_to_gs_s),
            ("medium.tau_recomb_s", self.tau_recomb_s),
            ("medium.t2_s", self.t2_s),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::validation(format!("{name} must be > 0, got {value}")));
            }
        }
        if !(self.background_index >= 1.0 && self.background_index.is_finite()) {
            return Err(Error::validation(format!(
                "medium.background_index must be >= 1, got {}",
                self.background_index
            )));
        }
        if self.num_layers == 0 {
            return Err(Error::validation("medium.num_layers must be >= 1"));
        }
        if !(self.modal_gain_peak_per_m >= 0.0 && self.modal_gain_peak_per_m.is_finite()) {
            return Err(Error::validation("medium.modal_gain_peak_per_m must be >= 0"));
        }
        if !(self.pump_rate_per_s >= 0.0 && self.pump_rate_per_s.is_finite()) {
            return Err(Error::validation("medium.pump_rate_per_s must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.facet_reflectivity) {
            return Err(Error::validation(format!(
                "medium.facet_reflectivity must lie in [0, 1], got {}",
                self.facet_reflectivity
            )));
        }
        if !(self.tpa_coeff_m_per_w >= 0.0 && self.tpa_coeff_m_per_w.is_finite()) {
            return Err(Error::validation("medium.tpa_coeff_m_per_w must be >= 0"));
        }
        if !self.kerr_index_m2_per_w.is_finite() {
            return Err(Error::validation("medium.kerr_index_m2_per_w must be finite"));
        }
        Ok(())
    }

    /// Volumetric dot density seen by the mode (1/m³).
    pub fn volumetric_dot_density(&self) -> f64 {
        self.num_layers as f64 * self.dot_sheet_density_per_m2 / self.mode_height_m
    }

    /// Decay rate of the optical coherence (1/s).
    ///
    /// Never smaller than half the sum of the incoherent in/out rates of the
    /// excited level, which keeps the two-level density matrix positive.
    pub fn dephasing_rate(&self) -> f64 {
        let incoherent = 0.5 * (1.0 / self.tau_es_to_gs_s + 1.0 / self.tau_recomb_s);
        (1.0 / self.t2_s).max(incoherent)
    }

    pub fn rates(&self) -> RateConstants {
        RateConstants {
            pump_rate: self.pump_rate_per_s,
            tau_capture: self.tau_res_to_es_s,
            tau_relax: self.tau_es_to_gs_s,
            tau_recomb: self.tau_recomb_s,
        }
    }

    pub fn nonresonant_enabled(&self) -> bool {
        self.tpa_coeff_m_per_w != 0.0 || self.kerr_index_m2_per_w != 0.0
    }
}

/// Rate constants of the incoherent reservoir → ES → GS feeding chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConstants {
    pub pump_rate: f64,
    pub tau_capture: f64,
    pub tau_relax: f64,
    pub tau_recomb: f64,
}

/// Field-free occupations of one dot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occupations {
    pub res: f64,
    pub es: f64,
    pub ee: f64,
}

impl Occupations {
    pub fn gg(&self) -> f64 {
        1.0 - self.ee
    }

    pub fn inversion(&self) -> f64 {
        2.0 * self.ee - 1.0
    }
}

impl RateConstants {
    /// Time derivatives `(d res, d es, d ee)` of the incoherent part.
    #[inline(always)]
    pub fn derivatives(&self, res: f64, es: f64, ee: f64) -> (f64, f64, f64) {
        let gg = 1.0 - ee;
        let capture = res * (1.0 - es) / self.tau_capture;
        let relax = es * gg / self.tau_relax;
        let d_res = self.pump_rate * (1.0 - res) - capture - res / self.tau_recomb;
        let d_es = capture - relax - es / self.tau_recomb;
        let d_ee = relax - ee / self.tau_recomb;
        (d_res, d_es, d_ee)
    }

    /// Occupations that hold the excited level at `ee` in equilibrium, and the
    /// pump rate that sustains them. `None` when no pump rate can reach `ee`.
    fn chain_for_ee(&self, ee: f64) -> Option<(Occupations, f64)> {
        let gg = 1.0 - ee;
        if gg <= 0.0 {
            return None;
        }
        let es = ee * self.tau_relax / (self.tau_recomb * gg);
        if !(0.0..1.0).contains(&es) {
            return None;
        }
        let res = self.tau_capture * (es * gg / self.tau_relax + es / self.tau_recomb) / (1.0 - es);
        if !(0.0..1.0).contains(&res) {
            return None;
        }
        let pump = (res * (1.0 - es) / self.tau_capture + res / self.tau_recomb) / (1.0 - res);
        Some((Occupations { res, es, ee }, pump))
    }

    /// Pump rate whose field-free fixed point has the given inversion `rho_ee - rho_gg`.
    pub fn pump_rate_for_inversion(&self, inversion: f64) -> Result<f64> {
        if !(-1.0..1.0).contains(&inversion) {
            return Err(Error::validation(format!("steady-state inversion must lie in [-1, 1), got {inversion}")));
        }
        let ee = 0.5 * (1.0 + inversion);
        self.chain_for_ee(ee)
            .map(|(_, p)| p)
            .ok_or_else(|| Error::validation(format!("inversion {inversion} unreachable with these rate constants")))
    }

    /// Exact field-free fixed point of the rate equations for the configured pump.
    ///
    /// The sustaining pump rate grows monotonically with `ee`, so the fixed
    /// point is found by bisection on `ee` to machine precision.
    pub fn steady_state(&self) -> Occupations {
        if self.pump_rate <= 0.0 {
            return Occupations { res: 0.0, es: 0.0, ee: 0.0 };
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            match self.chain_for_ee(mid) {
                Some((_, p)) if p <= self.pump_rate => lo = mid,
                _ => hi = mid,
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        self.chain_for_ee(lo).map(|(occ, _)| occ).unwrap_or(Occupations { res: 0.0, es: 0.0, ee: 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub center_wavelength_m: f64,
    pub inhomog_fwhm_ev: f64,
    pub num_groups: usize,
    /// Derived from the gain calibration; not a configuration input.
    #[serde(skip)]
    pub dipole_moment_cm: f64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec { center_wavelength_m: 1.55e-6, inhomog_fwhm_ev: 30e-3, num_groups: 11, dipole_moment_cm: 0.0 }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_groups == 0 || self.num_groups % 2 == 0 {
            return Err(Error::validation(format!(
                "ensemble.num_groups must be a positive odd integer, got {}",
                self.num_groups
            )));
        }
        if !(self.inhomog_fwhm_ev >= 0.0 && self.inhomog_fwhm_ev.is_finite()) {
            return Err(Error::validation(format!(
                "ensemble.inhomog_fwhm_ev must be >= 0, got {}",
                self.inhomog_fwhm_ev
            )));
        }
        if !(self.center_wavelength_m > 0.0 && self.center_wavelength_m.is_finite()) {
            return Err(Error::validation("ensemble.center_wavelength_m must be > 0"));
        }
        Ok(())
    }

    pub fn line_center(&self) -> f64 {
        angular_frequency(self.center_wavelength_m)
    }

    /// Inhomogeneous FWHM as an angular frequency.
    pub fn fwhm_angular(&self) -> f64 {
        ev_to_angular_frequency(self.inhomog_fwhm_ev)
    }

    pub fn sigma_angular(&self) -> f64 {
        self.fwhm_angular() / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
    }

    /// Returns a copy whose dipole moment reproduces the medium's peak modal gain.
    pub fn calibrated(&self, medium: &MediumSpec) -> Result<EnsembleSpec> {
        let mut out = self.clone();
        out.dipole_moment_cm = calibrate_dipole(medium, self)?;
        Ok(out)
    }
}

/// One spectral class of dots with its per-cell density-matrix state.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGroup {
    pub omega_g_rad_per_s: f64,
    pub weight: f64,
    /// `rho_gg = 1 - rho_ee` is implied.
    pub rho_ee: Vec<f64>,
    pub rho_es: Vec<f64>,
    pub rho_res: Vec<f64>,
    pub coh_re: Vec<f64>,
    pub coh_im: Vec<f64>,
}

impl SpectralGroup {
    fn new(omega: f64, weight: f64) -> Self {
        SpectralGroup {
            omega_g_rad_per_s: omega,
            weight,
            rho_ee: Vec::new(),
            rho_es: Vec::new(),
            rho_res: Vec::new(),
            coh_re: Vec::new(),
            coh_im: Vec::new(),
        }
    }

    pub fn num_cells(&self) -> usize {
        self.rho_ee.len()
    }

    /// Resizes the per-cell state and fills every cell with `occ` and zero coherence.
    pub fn fill(&mut self, num_cells: usize, occ: Occupations) {
        self.rho_ee = vec![occ.ee; num_cells];
        self.rho_es = vec![occ.es; num_cells];
        self.rho_res = vec![occ.res; num_cells];
        self.coh_re = vec![0.0; num_cells];
        self.coh_im = vec![0.0; num_cells];
    }

    pub fn coherence(&self, cell: usize) -> Complex64 {
        Complex64::new(self.coh_re[cell], self.coh_im[cell])
    }

    pub fn rho_gg(&self, cell: usize) -> f64 {
        1.0 - self.rho_ee[cell]
    }

    pub fn inversion(&self, cell: usize) -> f64 {
        2.0 * self.rho_ee[cell] - 1.0
    }
}

/// Discretizes the Gaussian inhomogeneous line into equally spaced groups over
/// ±2.5σ. Group 0 is the line-center group; the rest follow in order of
/// increasing |detuning|, red side first.
pub fn build_ensemble(spec: &EnsembleSpec) -> Result<Vec<SpectralGroup>> {
    spec.validate()?;
    let center = spec.line_center();
    let n = spec.num_groups;
    let half = (n / 2) as i64;
    let sigma = spec.sigma_angular();
    let spacing = if n > 1 { 5.0 * sigma / (n - 1) as f64 } else { 0.0 };

    let mut order = vec![0_i64];
    for k in 1..=half {
        order.push(-k);
        order.push(k);
    }
    let density = |k: i64| -> f64 {
        if sigma > 0.0 {
            let x = k as f64 * spacing / sigma;
            (-0.5 * x * x).exp()
        } else {
            1.0
        }
    };
    let total: f64 = order.iter().map(|&k| density(k)).sum();
    Ok(order.into_iter().map(|k| SpectralGroup::new(center + k as f64 * spacing, density(k) / total)).collect())
}

/// Linear susceptibility contributed by the ensemble at `omega` for a uniform
/// inversion, from the lab-frame two-level response (both resonant and
/// counter-rotating poles).
pub fn resonant_susceptibility(
    medium: &MediumSpec,
    ensemble: &EnsembleSpec,
    groups: &[SpectralGroup],
    omega: f64,
    inversion: f64,
) -> Complex64 {
    let gamma = medium.dephasing_rate();
    let mu = ensemble.dipole_moment_cm;
    let prefactor = medium.volumetric_dot_density() * mu * mu * inversion / (VACUUM_PERMITTIVITY * HBAR);
    let i = Complex64::i();
    groups
        .iter()
        .map(|g| {
            let resonant = -i / Complex64::new(gamma, g.omega_g_rad_per_s - omega);
            let counter = i / Complex64::new(gamma, -(g.omega_g_rad_per_s + omega));
            g.weight * (resonant + counter)
        })
        .sum::<Complex64>()
        * prefactor
}

/// Small-signal power gain coefficient (1/m) at `omega` for a uniform inversion.
pub fn small_signal_gain_at_inversion(
    medium: &MediumSpec,
    ensemble: &EnsembleSpec,
    omega: f64,
    inversion: f64,
) -> Result<f64> {
    medium.validate()?;
    let groups = build_ensemble(ensemble)?;
    Ok(gain_from_groups(medium, ensemble, &groups, omega, inversion))
}

fn gain_from_groups(
    medium: &MediumSpec,
    ensemble: &EnsembleSpec,
    groups: &[SpectralGroup],
    omega: f64,
    inversion: f64,
) -> f64 {
    let chi = resonant_susceptibility(medium, ensemble, groups, omega, inversion);
    let n2 = medium.background_index * medium.background_index;
    let k = (Complex64::new(n2, 0.0) + chi).sqrt() * (omega / SPEED_OF_LIGHT);
    -2.0 * k.im
}

/// Small-signal gain (1/m) of the fully inverted ensemble at `omega`.
pub fn small_signal_gain(medium: &MediumSpec, ensemble: &EnsembleSpec, omega: f64) -> Result<f64> {
    small_signal_gain_at_inversion(medium, ensemble, omega, 1.0)
}

/// Dipole moment (C·m) at which the fully inverted ensemble's line-center gain
/// equals `medium.modal_gain_peak_per_m`.
pub fn calibrate_dipole(medium: &MediumSpec, ensemble: &EnsembleSpec) -> Result<f64> {
    medium.validate()?;
    let groups = build_ensemble(ensemble)?;
    let target = medium.modal_gain_peak_per_m;
    if target == 0.0 {
        return Ok(0.0);
    }
    let omega = ensemble.line_center();
    let gain_for = |mu: f64| {
        let mut e = ensemble.clone();
        e.dipole_moment_cm = mu;
        gain_from_groups(medium, &e, &groups, omega, 1.0)
    };
    // Gain is ~quadratic in mu; refine the linear-response guess by secant steps on mu².
    let probe = 1e-29;
    let mut m2 = probe * probe * target / gain_for(probe);
    for _ in 0..50 {
        let g = gain_for(m2.sqrt());
        let next = m2 * target / g;
        if ((next - m2) / m2).abs() < 1e-15 {
            m2 = next;
            break;
        }
        m2 = next;
    }
    let mu = m2.sqrt();
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::validation("gain calibration failed to converge"));
    }
    Ok(mu)
}
