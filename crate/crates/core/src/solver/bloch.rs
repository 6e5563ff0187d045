//! Lab-frame optical Bloch equations for every spectral group on every device cell.
//!
//! ```text
//! dρ_eg/dt = -(iω_g + γ) ρ_eg - i (μE/ħ)(ρ_ee - ρ_gg)
//! dρ_ee/dt =  2 (μE/ħ) Im ρ_eg + ρ_es ρ_gg/τ_rel - ρ_ee/τ_rec
//! dρ_es/dt =  ρ_res (1-ρ_es)/τ_cap - ρ_es ρ_gg/τ_rel - ρ_es/τ_rec
//! dρ_res/dt = Λ (1-ρ_res) - ρ_res (1-ρ_es)/τ_cap - ρ_res/τ_rec
//! P = 2 N μ Σ_g w_g Re ρ_eg
//! ```
//!
//! Free precession and dephasing are integrated exactly (integrating factor);
//! the field drive and the rate terms use a Heun predictor-corrector across
//! the step, with the field linear between `E^n` and `E^{n+1}`. The real part
//! of the corrected coherence depends only on `ρ^n` and `E^n`, so `P^{n+1}` is
//! known before `E^{n+1}` and the field and medium stay synchronized without
//! iteration.

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::medium::{MediumSpec, RateConstants, SpectralGroup};

/// Tolerance on occupation bounds and density-matrix positivity.
pub const INVARIANT_TOLERANCE: f64 = 1e-9;

/// Step constants shared by all cells of one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStepper {
    dt: f64,
    /// `μ/ħ`.
    coupling: f64,
    decay: f64,
    cos: f64,
    sin: f64,
    /// `2 N μ w_g`.
    polarization_scale: f64,
    pump: f64,
    inv_capture: f64,
    inv_relax: f64,
    inv_recomb: f64,
}

impl GroupStepper {
    pub fn new(medium: &MediumSpec, dipole_cm: f64, group: &SpectralGroup, dt: f64) -> Self {
        Self::from_parts(
            medium.rates(),
            medium.dephasing_rate(),
            dipole_cm,
            group.omega_g_rad_per_s,
            group.weight * 2.0 * medium.volumetric_dot_density() * dipole_cm,
            dt,
        )
    }

    pub fn from_parts(
        rates: RateConstants,
        dephasing_rate: f64,
        dipole_cm: f64,
        omega: f64,
        polarization_scale: f64,
        dt: f64,
    ) -> Self {
        let theta = omega * dt;
        GroupStepper {
            dt,
            coupling: dipole_cm / HBAR,
            decay: (-dephasing_rate * dt).exp(),
            cos: theta.cos(),
            sin: theta.sin(),
            polarization_scale,
            pump: rates.pump_rate,
            inv_capture: 1.0 / rates.tau_capture,
            inv_relax: 1.0 / rates.tau_relax,
            inv_recomb: 1.0 / rates.tau_recomb,
        }
    }

    #[inline(always)]
    fn rates(&self, res: f64, es: f64, ee: f64) -> (f64, f64, f64) {
        let gg = 1.0 - ee;
        let capture = res * (1.0 - es) * self.inv_capture;
        let relax = es * gg * self.inv_relax;
        (
            self.pump * (1.0 - res) - capture - res * self.inv_recomb,
            capture - relax - es * self.inv_recomb,
            relax - ee * self.inv_recomb,
        )
    }

    /// Real part of `e^{-(iω+γ)dt}(ρ + dt/2 · s)`, `s = -i(μE/ħ)w`: the
    /// coherence that sets `P` one step ahead.
    #[inline(always)]
    fn projected_real(&self, x: f64, y: f64, e: f64, w: f64) -> f64 {
        let uy = y - 0.5 * self.dt * self.coupling * e * w;
        self.decay * (self.cos * x + self.sin * uy)
    }

    /// Advances one group over all cells from `E^n = e0` to `E^{n+1} = e1` and
    /// adds its share of `P^{n+2}` to `p_ahead`.
    pub fn advance(&self, group: &mut SpectralGroup, e0: &[f64], e1: &[f64], p_ahead: &mut [f64]) {
        self.advance_prefix(group, group.num_cells(), e0, e1, p_ahead);
    }

    /// [`advance`](Self::advance) restricted to the first `n` cells.
    pub fn advance_prefix(&self, group: &mut SpectralGroup, n: usize, e0: &[f64], e1: &[f64], p_ahead: &mut [f64]) {
        let h = self.dt;
        let hh = 0.5 * h;
        let k = self.coupling;
        let (d, c, s) = (self.decay, self.cos, self.sin);
        let SpectralGroup { rho_ee, rho_es, rho_res, coh_re, coh_im, .. } = group;
        let rho_ee = &mut rho_ee[..n];
        let (rho_es, rho_res) = (&mut rho_es[..n], &mut rho_res[..n]);
        let (coh_re, coh_im) = (&mut coh_re[..n], &mut coh_im[..n]);
        let (e0, e1, p_ahead) = (&e0[..n], &e1[..n], &mut p_ahead[..n]);
        for j in 0..n {
            let (ee, es, res, x, y) = (&mut rho_ee[j], &mut rho_es[j], &mut rho_res[j], &mut coh_re[j], &mut coh_im[j]);
            let (ea, eb, p) = (e0[j], e1[j], &mut p_ahead[j]);
            let w0 = 2.0 * *ee - 1.0;
            let drive0 = k * ea;
            let (dres0, des0, dee0) = self.rates(*res, *es, *ee);
            let fee0 = 2.0 * drive0 * *y + dee0;

            // Predictor.
            let uy = *y - h * drive0 * w0;
            let y_p = d * (c * uy - s * *x);
            let ee_p = *ee + h * fee0;
            let es_p = *es + h * des0;
            let res_p = *res + h * dres0;
            let w_p = 2.0 * ee_p - 1.0;

            // Corrector.
            let drive1 = k * eb;
            let vy = *y - hh * drive0 * w0;
            let x1 = d * (c * *x + s * vy);
            let y1 = d * (c * vy - s * *x) - hh * drive1 * w_p;
            let (dres1, des1, dee1) = self.rates(res_p, es_p, ee_p);
            let fee1 = 2.0 * drive1 * y_p + dee1;
            let ee1 = *ee + hh * (fee0 + fee1);

            *es += hh * (des0 + des1);
            *res += hh * (dres0 + dres1);
            *ee = ee1;
            *x = x1;
            *y = y1;
            *p += self.polarization_scale * self.projected_real(x1, y1, eb, 2.0 * ee1 - 1.0);
        }
    }

    /// `P^{n+1}` contribution from the current state and `E^n`, used to prime a run.
    pub fn polarization_ahead(&self, group: &SpectralGroup, e: &[f64], p_ahead: &mut [f64]) {
        for (j, p) in p_ahead.iter_mut().enumerate() {
            let w = group.inversion(j);
            *p += self.polarization_scale * self.projected_real(group.coh_re[j], group.coh_im[j], e[j], w);
        }
    }
}

/// Largest violation of the occupation bounds and of `|ρ_eg|² ≤ ρ_ee ρ_gg`, with its cell.
pub fn worst_violation(group: &SpectralGroup) -> (f64, usize, &'static str) {
    let mut worst = (0.0, 0, "");
    for j in 0..group.num_cells() {
        let (ee, gg) = (group.rho_ee[j], group.rho_gg(j));
        let coh2 = group.coh_re[j] * group.coh_re[j] + group.coh_im[j] * group.coh_im[j];
        let checks = [
            ((-ee).max(ee - 1.0), "rho_ee outside [0, 1]"),
            ((-gg).max(gg - 1.0), "rho_gg outside [0, 1]"),
            ((-group.rho_es[j]).max(group.rho_es[j] - 1.0), "rho_es outside [0, 1]"),
            ((-group.rho_res[j]).max(group.rho_res[j] - 1.0), "rho_res outside [0, 1]"),
            (coh2 - ee * gg, "|rho_eg|^2 exceeds rho_ee*rho_gg"),
        ];
        for (v, what) in checks {
            if v > worst.0 {
                worst = (v, j, what);
            }
        }
    }
    worst
}

/// Errors out when any group violates the physical bounds beyond tolerance.
pub fn check_invariants(groups: &[SpectralGroup], cell_offset: usize, step: usize) -> Result<()> {
    for (g, group) in groups.iter().enumerate() {
        let (v, cell, what) = worst_violation(group);
        if v > INVARIANT_TOLERANCE {
            return Err(Error::PhysicsInvariant {
                cell: cell_offset + cell,
                group: g,
                step,
                what: format!("{what} by {v:.3e}"),
            });
        }
    }
    Ok(())
}

/// A lone dot driven by a prescribed field, for oracle comparisons.
#[derive(Debug, Clone)]
pub struct SingleCell {
    stepper: GroupStepper,
    pub state: SpectralGroup,
}

impl SingleCell {
    pub fn new(medium: &MediumSpec, dipole_cm: f64, omega: f64, dt: f64) -> Self {
        let mut state = SpectralGroup {
            omega_g_rad_per_s: omega,
            weight: 1.0,
            rho_ee: Vec::new(),
            rho_es: Vec::new(),
            rho_res: Vec::new(),
            coh_re: Vec::new(),
            coh_im: Vec::new(),
        };
        state.fill(1, medium.rates().steady_state());
        let stepper = GroupStepper::new(medium, dipole_cm, &state, dt);
        SingleCell { stepper, state }
    }

    /// Sets the two-level part of the state; the feeding levels are left empty.
    pub fn set_state(&mut self, rho_ee: f64, coherence: (f64, f64)) {
        self.state.rho_ee[0] = rho_ee;
        self.state.rho_es[0] = 0.0;
        self.state.rho_res[0] = 0.0;
        self.state.coh_re[0] = coherence.0;
        self.state.coh_im[0] = coherence.1;
    }

    pub fn step(&mut self, e0: f64, e1: f64) {
        let mut p = [0.0];
        self.stepper.advance(&mut self.state, &[e0], &[e1], &mut p);
    }

    pub fn inversion(&self) -> f64 {
        self.state.inversion(0)
    }
}
