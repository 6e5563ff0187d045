//! Carrier-resolved 1-D Maxwell-Bloch propagation through the amplifier.

pub mod bloch;
pub mod field;
pub mod grid;
pub mod propagate;

pub use bloch::{GroupStepper, SingleCell, INVARIANT_TOLERANCE};
pub use field::{FieldState, YeeStepper};
pub use grid::{GridSettings, GridSpec, Layout};
pub use propagate::{
    required_steps, run_propagation, InitialState, ProbeTap, Propagation, PropagationOptions, SnapshotStride, Snapshots,
};
