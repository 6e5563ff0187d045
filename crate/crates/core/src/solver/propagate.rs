use crate::error::{Error, Result};
use crate::medium::{build_ensemble, EnsembleSpec, MediumSpec, Occupations, SpectralGroup};
use crate::pulse::{Launch, Waveform};

use super::bloch::{check_invariants, GroupStepper};
use super::field::{FieldState, YeeStepper};
use super::grid::{GridSpec, Layout};

/// Extra time after the last injected sample, beyond the geometric transit.
const EXIT_MARGIN_S: f64 = 300e-15;

/// Longest automatic extension of a run whose output tail has not settled.
const MAX_EXTENSION_S: f64 = 2e-12;

/// Largest tail field (relative to the tap peak) tolerated at the end of a run.
const MAX_TAIL_RESIDUAL: f64 = 1e-3;

/// Field time series recorded at one cell, one sample per executed step.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTap {
    pub position_cell: usize,
    pub e_samples: Vec<f64>,
}

/// Initial occupations of the device before injection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialState {
    /// Field-free fixed point of the pumped rate equations.
    #[default]
    SteadyState,
    Fixed(Occupations),
}

/// Optional (z, t) sampling of the field and ensemble inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotStride {
    pub steps: usize,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshots {
    pub stride: SnapshotStride,
    pub z_positions: usize,
    /// Row-major `[time][z]` electric field over the whole grid.
    pub field: Vec<f64>,
    /// Row-major `[time][z]` weighted ensemble inversion (zero outside the device).
    pub inversion: Vec<f64>,
}

impl Snapshots {
    pub fn rows(&self) -> usize {
        self.field.len() / self.z_positions.max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationOptions {
    pub initial: InitialState,
    /// Check occupation bounds and positivity after every step.
    pub check_invariants: bool,
    pub snapshots: Option<SnapshotStride>,
    /// Overrides the automatically sized run length.
    pub steps: Option<usize>,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions {
            initial: InitialState::SteadyState,
            check_invariants: cfg!(debug_assertions),
            snapshots: None,
            steps: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub dt_s: f64,
    pub layout: Layout,
    pub input: ProbeTap,
    pub output: ProbeTap,
    pub groups: Vec<SpectralGroup>,
    pub snapshots: Option<Snapshots>,
}

impl Propagation {
    pub fn launch(&self, medium: &MediumSpec, mode_area_m2: f64) -> Launch {
        Launch { mode_area_m2, refractive_index: medium.background_index }
    }
}

/// Steps needed for the injected record plus its transit to the output tap.
pub fn required_steps(grid: &GridSpec, layout: &Layout, medium: &MediumSpec, waveform: &Waveform) -> usize {
    let distance = (layout.output_tap - layout.source_cell) as f64 * grid.dz_m;
    let transit = 1.05 * distance / grid.wave_speed(medium);
    let end = waveform.axis.t_end().max(0.0) + transit + EXIT_MARGIN_S;
    (end / grid.dt_s).ceil() as usize
}

/// Propagates `injected` (the field at the source plane versus time) through
/// the amplifier. `ensemble.dipole_moment_cm` must already be calibrated.
pub fn run_propagation(
    medium: &MediumSpec,
    ensemble: &EnsembleSpec,
    grid: &GridSpec,
    injected: &Waveform,
    options: &PropagationOptions,
) -> Result<Propagation> {
    medium.validate()?;
    if (injected.axis.dt_s - grid.dt_s).abs() > 1e-9 * grid.dt_s {
        return Err(Error::validation("injected waveform must be sampled on the grid time step"));
    }
    let layout = grid.layout(medium);
    let cells = layout.medium_cells();
    let mut groups = build_ensemble(ensemble)?;
    let occupations = match options.initial {
        InitialState::SteadyState => medium.rates().steady_state(),
        InitialState::Fixed(occ) => occ,
    };
    for g in &mut groups {
        g.fill(cells, occupations);
    }
    let steppers: Vec<GroupStepper> =
        groups.iter().map(|g| GroupStepper::new(medium, ensemble.dipole_moment_cm, g, grid.dt_s)).collect();

    let auto_steps = required_steps(grid, &layout, medium, injected);
    let steps = options.steps.unwrap_or(auto_steps);

    let mut yee = YeeStepper::new(*grid, layout, medium);
    let mut field = FieldState::new(grid.num_cells);
    let mut p_next = vec![0.0; cells];
    let mut p_ahead = vec![0.0; cells];
    for (g, s) in groups.iter().zip(&steppers) {
        s.polarization_ahead(g, &field.e_field[layout.medium_start..layout.medium_end], &mut p_next);
    }

    let mut input = ProbeTap { position_cell: layout.input_tap, e_samples: Vec::with_capacity(steps) };
    let mut output = ProbeTap { position_cell: layout.output_tap, e_samples: Vec::with_capacity(steps) };
    let mut snaps = options.snapshots.map(|stride| {
        let stride = SnapshotStride { steps: stride.steps.max(1), cells: stride.cells.max(1) };
        Snapshots {
            stride,
            z_positions: grid.num_cells.div_ceil(stride.cells),
            field: Vec::new(),
            inversion: Vec::new(),
        }
    });
    let source_start = injected.axis.t_start_s;
    let source_end = injected.axis.t_end() + grid.dt_s;
    let incident = |t: f64| {
        if t < source_start - grid.dt_s || t > source_end {
            0.0
        } else {
            injected.sample_at(t)
        }
    };

    // Auto-sized runs grow in 100 fs chunks while the output tail still rings,
    // up to MAX_EXTENSION_S past the geometric estimate.
    let chunk = (100e-15 / grid.dt_s).ceil() as usize;
    let cap = steps + (MAX_EXTENSION_S / grid.dt_s).ceil() as usize;
    let mut target = steps;
    let mut step = 0;
    loop {
        while step < target {
            yee.step(&mut field, &incident, &p_next)?;
            // The leapfrog stencil moves at most one cell per step, so cells past
            // `source + step + 1` still hold exactly zero field and an untouched
            // steady state.
            let reach = (layout.source_cell + step + 2).saturating_sub(layout.medium_start).min(cells);
            p_ahead.iter_mut().for_each(|p| *p = 0.0);
            let e_now = &field.e_field[layout.medium_start..layout.medium_start + reach];
            for (g, s) in groups.iter_mut().zip(&steppers) {
                s.advance_prefix(g, reach, &yee.e_before[..reach], e_now, &mut p_ahead[..reach]);
            }
            std::mem::swap(&mut p_next, &mut p_ahead);

            if options.check_invariants {
                check_invariants(&groups, layout.medium_start, step + 1)?;
            }
            input.e_samples.push(field.e_field[layout.input_tap]);
            output.e_samples.push(field.e_field[layout.output_tap]);
            if let Some(s) = snaps.as_mut() {
                if (step + 1) % s.stride.steps == 0 {
                    record_snapshot(s, &field, &groups, &layout);
                }
            }
            step += 1;
        }
        if options.steps.is_some() {
            break;
        }
        match check_tail(&output, grid.dt_s) {
            Ok(()) => break,
            Err(e) if target >= cap => return Err(e),
            Err(_) => target = (target + chunk).min(cap),
        }
    }
    Ok(Propagation { dt_s: grid.dt_s, layout, input, output, groups, snapshots: snaps })
}

fn record_snapshot(s: &mut Snapshots, field: &FieldState, groups: &[SpectralGroup], layout: &Layout) {
    for i in (0..field.e_field.len()).step_by(s.stride.cells) {
        s.field.push(field.e_field[i]);
        let inv = if (layout.medium_start..layout.medium_end).contains(&i) {
            let j = i - layout.medium_start;
            groups.iter().map(|g| g.weight * g.inversion(j)).sum()
        } else {
            0.0
        };
        s.inversion.push(inv);
    }
}

/// Fails when the output tap still carries appreciable field in its final 100 fs.
fn check_tail(tap: &ProbeTap, dt: f64) -> Result<()> {
    let peak = tap.e_samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(());
    }
    let tail_len = ((100e-15 / dt).ceil() as usize).min(tap.e_samples.len());
    let tail = tap.e_samples[tap.e_samples.len() - tail_len..].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let residual = tail / peak;
    if residual > MAX_TAIL_RESIDUAL {
        return Err(Error::RunLengthOverflow { residual });
    }
    Ok(())
}
