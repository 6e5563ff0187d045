use serde::{Deserialize, Serialize};

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{Error, Result};
use crate::medium::MediumSpec;

/// Minimum padding between each grid end and the device facets.
pub const MIN_PADDING_M: f64 = 10e-6;

/// User-facing grid knobs; the concrete [`GridSpec`] is derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    /// Time steps per optical cycle at the line-center wavelength.
    pub steps_per_cycle: f64,
    pub courant: f64,
    pub padding_m: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings { steps_per_cycle: 40.0, courant: 0.98, padding_m: MIN_PADDING_M }
    }
}

impl GridSettings {
    pub fn resolve(&self, medium: &MediumSpec, wavelength_m: f64) -> Result<GridSpec> {
        if !(self.steps_per_cycle >= 25.0 && self.steps_per_cycle.is_finite()) {
            return Err(Error::validation(format!("grid.steps_per_cycle must be >= 25, got {}", self.steps_per_cycle)));
        }
        let period = wavelength_m / SPEED_OF_LIGHT;
        let dt = period / self.steps_per_cycle;
        let dz = SPEED_OF_LIGHT * dt / (medium.background_index * self.courant);
        let span = medium.length_m + 2.0 * self.padding_m;
        let num_cells = (span / dz).ceil() as usize + 1;
        let grid = GridSpec { dz_m: dz, dt_s: dt, num_cells, courant: self.courant };
        grid.validate(medium, wavelength_m, self.padding_m)?;
        Ok(grid)
    }
}

/// Concrete 1-D Yee grid. The padding shares the background index, standing
/// in for an ideal anti-reflection coating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dz_m: f64,
    pub dt_s: f64,
    pub num_cells: usize,
    /// `c·dt/(n·dz)`.
    pub courant: f64,
}

impl GridSpec {
    pub fn validate(&self, medium: &MediumSpec, wavelength_m: f64, padding_m: f64) -> Result<()> {
        let n = medium.background_index;
        let courant = SPEED_OF_LIGHT * self.dt_s / (n * self.dz_m);
        if !(self.courant > 0.0 && self.courant <= 1.0) || courant > 1.0 + 1e-12 {
            return Err(Error::validation(format!("grid.courant must lie in (0, 1], got {courant}")));
        }
        if self.dz_m > wavelength_m / (20.0 * n) * (1.0 + 1e-12) {
            return Err(Error::validation(format!(
                "dz = {:.3e} m resolves fewer than 20 cells per in-medium wavelength",
                self.dz_m
            )));
        }
        if !(padding_m >= MIN_PADDING_M * (1.0 - 1e-12)) {
            return Err(Error::validation(format!("grid.padding_m must be >= {MIN_PADDING_M:e} m, got {padding_m}")));
        }
        if (self.num_cells as f64) * self.dz_m < medium.length_m + 2.0 * padding_m * (1.0 - 1e-9) {
            return Err(Error::validation("grid too short for the device plus padding"));
        }
        Ok(())
    }

    /// Places the device in the middle of the grid along with source and taps.
    pub fn layout(&self, medium: &MediumSpec) -> Layout {
        let medium_cells = ((medium.length_m / self.dz_m).round() as usize).max(1);
        let medium_start = (self.num_cells - medium_cells) / 2;
        let medium_end = medium_start + medium_cells;
        Layout {
            source_cell: (medium_start / 4).max(3),
            input_tap: medium_start.saturating_sub(4).max(4),
            medium_start,
            medium_end,
            output_tap: (medium_end + 4).min(self.num_cells - 2),
        }
    }

    /// Phase velocity of the background medium.
    pub fn wave_speed(&self, medium: &MediumSpec) -> f64 {
        SPEED_OF_LIGHT / medium.background_index
    }
}

/// Cell indices of the device, source and probe taps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub source_cell: usize,
    pub input_tap: usize,
    pub medium_start: usize,
    pub medium_end: usize,
    pub output_tap: usize,
}

impl Layout {
    pub fn medium_cells(&self) -> usize {
        self.medium_end - self.medium_start
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_is_stable_and_resolved() {
        let medium = MediumSpec::default();
        let grid = GridSettings::default().resolve(&medium, 1.55e-6).unwrap();
        assert!((grid.dt_s - 1.55e-6 / SPEED_OF_LIGHT / 40.0).abs() < 1e-24);
        assert!(grid.dz_m <= 1.55e-6 / (20.0 * 3.5));
        let layout = grid.layout(&medium);
        assert!(layout.source_cell < layout.input_tap);
        assert!(layout.input_tap < layout.medium_start);
        assert!(layout.medium_end < layout.output_tap);
        assert!((layout.medium_cells() as f64 * grid.dz_m - 100e-6).abs() < grid.dz_m);
        assert!(layout.medium_start as f64 * grid.dz_m >= 10e-6 * 0.999);
    }

    #[test]
    fn coarse_settings_rejected() {
        let medium = MediumSpec::default();
        let bad = GridSettings { courant: 1.2, ..Default::default() };
        assert!(bad.resolve(&medium, 1.55e-6).is_err());
        let bad = GridSettings { steps_per_cycle: 10.0, ..Default::default() };
        assert!(bad.resolve(&medium, 1.55e-6).is_err());
        // 25 steps per cycle at courant 0.98 gives dz above λ/(20n).
        let coarse = GridSettings { steps_per_cycle: 25.0, courant: 0.5, ..Default::default() };
        assert!(coarse.resolve(&medium, 1.55e-6).is_err());
        let thin = GridSettings { padding_m: 5e-6, ..Default::default() };
        assert!(thin.resolve(&medium, 1.55e-6).is_err());
    }
}
