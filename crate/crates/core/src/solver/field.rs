//! 1-D Yee leapfrog for `E_x`/`H_y` along `z`, with first-order Mur ends and
//! a one-directional plane-wave injector.

use crate::constants::{SPEED_OF_LIGHT, VACUUM_PERMEABILITY, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};
use crate::medium::MediumSpec;

use super::grid::{GridSpec, Layout};

/// Field arrays. `h_field[i]` sits between `e_field[i]` and `e_field[i + 1]`,
/// half a step later than `e_field`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub e_field: Vec<f64>,
    pub h_field: Vec<f64>,
    /// Resonant polarization (C/m²) on the device cells, zero elsewhere.
    pub polarization: Vec<f64>,
    pub time_s: f64,
    pub step: usize,
}

impl FieldState {
    pub fn new(num_cells: usize) -> Self {
        FieldState {
            e_field: vec![0.0; num_cells],
            h_field: vec![0.0; num_cells - 1],
            polarization: vec![0.0; num_cells],
            time_s: 0.0,
            step: 0,
        }
    }

    /// Electromagnetic energy per unit area (J/m²) held on cells `[lo, hi)`.
    pub fn energy_per_area(&self, grid: &GridSpec, index: f64, lo: usize, hi: usize) -> f64 {
        let eps = VACUUM_PERMITTIVITY * index * index;
        let electric: f64 = self.e_field[lo..hi].iter().map(|e| e * e).sum();
        let magnetic: f64 = self.h_field[lo..hi.min(self.h_field.len())].iter().map(|h| h * h).sum();
        0.5 * (eps * electric + VACUUM_PERMEABILITY * magnetic) * grid.dz_m
    }

    /// Energy-weighted mean position (cell units) of the electric field over `[lo, hi)`.
    pub fn centroid(&self, lo: usize, hi: usize) -> f64 {
        let (mut w, mut wz) = (0.0, 0.0);
        for (i, e) in self.e_field[lo..hi].iter().enumerate() {
            let p = e * e;
            w += p;
            wz += p * (lo + i) as f64;
        }
        wz / w
    }

    fn first_non_finite(&self) -> Option<usize> {
        self.e_field.iter().position(|v| !v.is_finite()).or_else(|| self.h_field.iter().position(|v| !v.is_finite()))
    }
}

/// Intensity-dependent corrections on the device cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonresonant {
    pub tpa_coeff_m_per_w: f64,
    pub kerr_index_m2_per_w: f64,
}

/// Precomputed update coefficients and boundary bookkeeping for one grid.
#[derive(Debug, Clone)]
pub struct YeeStepper {
    pub grid: GridSpec,
    pub layout: Layout,
    index: f64,
    h_coeff: f64,
    e_coeff: f64,
    inv_eps: f64,
    mur: f64,
    nonresonant: Option<Nonresonant>,
    /// Field samples needed by the Mur update and the Bloch step.
    edge_prev: [f64; 2],
    pub e_before: Vec<f64>,
}

impl YeeStepper {
    pub fn new(grid: GridSpec, layout: Layout, medium: &MediumSpec) -> Self {
        let index = medium.background_index;
        let eps = VACUUM_PERMITTIVITY * index * index;
        let v_dt = SPEED_OF_LIGHT / index * grid.dt_s;
        let nonresonant = medium.nonresonant_enabled().then_some(Nonresonant {
            tpa_coeff_m_per_w: medium.tpa_coeff_m_per_w,
            kerr_index_m2_per_w: medium.kerr_index_m2_per_w,
        });
        YeeStepper {
            grid,
            layout,
            index,
            h_coeff: grid.dt_s / (VACUUM_PERMEABILITY * grid.dz_m),
            e_coeff: grid.dt_s / (eps * grid.dz_m),
            inv_eps: 1.0 / eps,
            mur: (v_dt - grid.dz_m) / (v_dt + grid.dz_m),
            nonresonant,
            edge_prev: [0.0; 2],
            e_before: vec![0.0; layout.medium_cells()],
        }
    }

    pub fn index(&self) -> f64 {
        self.index
    }

    /// Wave impedance of the background medium.
    pub fn impedance(&self) -> f64 {
        (VACUUM_PERMEABILITY / (VACUUM_PERMITTIVITY * self.index * self.index)).sqrt()
    }

    /// One leapfrog step: `H^{n-1/2} → H^{n+1/2}` then `E^n → E^{n+1}`.
    ///
    /// `incident` is the forward plane wave injected at the source cell as a
    /// function of time at the source plane. `polarization_next` is `P^{n+1}` on
    /// the device cells; the change from `state.polarization` drives `E`. The
    /// device-cell `E^n` is left in `self.e_before` for the Bloch step.
    pub fn step(
        &mut self,
        state: &mut FieldState,
        incident: &dyn Fn(f64) -> f64,
        polarization_next: &[f64],
    ) -> Result<()> {
        let n_cells = state.e_field.len();
        let dt = self.grid.dt_s;
        let t = state.time_s;
        let src = self.layout.source_cell;
        let (m0, m1) = (self.layout.medium_start, self.layout.medium_end);

        {
            let e = &state.e_field;
            for (i, h) in state.h_field.iter_mut().enumerate() {
                *h -= self.h_coeff * (e[i + 1] - e[i]);
            }
        }
        state.h_field[src - 1] += self.h_coeff * incident(t);

        self.edge_prev = [state.e_field[1], state.e_field[n_cells - 2]];
        self.e_before.copy_from_slice(&state.e_field[m0..m1]);

        {
            let h = &state.h_field;
            let e = &mut state.e_field;
            for i in 1..m0 {
                e[i] -= self.e_coeff * (h[i] - h[i - 1]);
            }
            for i in m1..n_cells - 1 {
                e[i] -= self.e_coeff * (h[i] - h[i - 1]);
            }
            let p_old = &state.polarization[m0..m1];
            match self.nonresonant {
                None => {
                    for (j, (p_new, p_prev)) in polarization_next.iter().zip(p_old).enumerate() {
                        let i = m0 + j;
                        e[i] -= self.e_coeff * (h[i] - h[i - 1]) + (p_new - p_prev) * self.inv_eps;
                    }
                }
                Some(nl) => self.nonresonant_update(e, h, polarization_next, p_old, nl),
            }
        }
        // H^{n+1/2} just upstream of the source, as seen by the total-field cell.
        let transit = self.grid.dz_m / (2.0 * SPEED_OF_LIGHT / self.index);
        state.e_field[src] += self.e_coeff * incident(t + 0.5 * dt + transit) / self.impedance();

        let last = n_cells - 1;
        state.e_field[0] = self.edge_prev[0] + self.mur * (state.e_field[1] - state.e_field[0]);
        state.e_field[last] = self.edge_prev[1] + self.mur * (state.e_field[last - 1] - state.e_field[last]);

        state.polarization[m0..m1].copy_from_slice(polarization_next);
        state.step += 1;
        state.time_s = state.step as f64 * dt;

        let sum: f64 = state.e_field.iter().map(|v| v * v).sum();
        if !sum.is_finite() {
            let cell = state.first_non_finite().unwrap_or(0);
            return Err(Error::NumericalBlowup { cell, step: state.step });
        }
        Ok(())
    }

    /// Device-cell update with a two-photon-absorption conductivity and a
    /// Kerr-shifted permittivity, both from the instantaneous intensity at `E^n`.
    fn nonresonant_update(&self, e: &mut [f64], h: &[f64], p_new: &[f64], p_old: &[f64], nl: Nonresonant) {
        let (m0, m1) = (self.layout.medium_start, self.layout.medium_end);
        let n0 = self.index;
        let dt = self.grid.dt_s;
        for i in m0..m1 {
            let j = i - m0;
            let intensity = n0 * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * e[i] * e[i];
            let n_eff = n0 + nl.kerr_index_m2_per_w * intensity;
            let eps = VACUUM_PERMITTIVITY * n_eff * n_eff;
            let sigma = nl.tpa_coeff_m_per_w * intensity * n0 * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT;
            let damp = sigma * dt / (2.0 * eps);
            let curl = (h[i] - h[i - 1]) / self.grid.dz_m;
            e[i] = ((1.0 - damp) * e[i] - dt / eps * curl - (p_new[j] - p_old[j]) / eps) / (1.0 + damp);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::grid::GridSettings;

    fn vacuum() -> (MediumSpec, GridSpec, Layout) {
        let medium = MediumSpec { background_index: 1.0, length_m: 100e-6, ..Default::default() };
        let settings = GridSettings { padding_m: 30e-6, ..Default::default() };
        let grid = settings.resolve(&medium, 1.55e-6).unwrap();
        let layout = grid.layout(&medium);
        (medium, grid, layout)
    }

    fn gaussian(t: f64) -> f64 {
        let t0 = 60e-15;
        let tau = 20e-15;
        let omega = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / 1.55e-6;
        1e6 * (-(t - t0).powi(2) / (tau * tau)).exp() * (omega * (t - t0)).cos()
    }

    #[test]
    fn injected_pulse_travels_forward_only() {
        let (medium, grid, layout) = vacuum();
        let mut stepper = YeeStepper::new(grid, layout, &medium);
        let mut state = FieldState::new(grid.num_cells);
        let zeros = vec![0.0; layout.medium_cells()];
        let steps = (250e-15 / grid.dt_s) as usize;
        for _ in 0..steps {
            stepper.step(&mut state, &gaussian, &zeros).unwrap();
        }
        let behind = state.energy_per_area(&grid, 1.0, 0, layout.source_cell);
        let ahead = state.energy_per_area(&grid, 1.0, layout.source_cell, grid.num_cells - 1);
        assert!(behind < 1e-4 * ahead, "{behind} vs {ahead}");
    }

    #[test]
    fn blowup_is_reported() {
        let (medium, grid, layout) = vacuum();
        let mut stepper = YeeStepper::new(grid, layout, &medium);
        let mut state = FieldState::new(grid.num_cells);
        state.e_field[layout.medium_start + 3] = f64::NAN;
        let zeros = vec![0.0; layout.medium_cells()];
        let err = stepper.step(&mut state, &|_| 0.0, &zeros).unwrap_err();
        match err {
            Error::NumericalBlowup { step, .. } => assert_eq!(step, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
