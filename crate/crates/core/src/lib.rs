//! Carrier-resolved Maxwell-Bloch simulation of two-pulse Ramsey fringes in a
//! quantum-dot optical amplifier.

pub mod analysis;
pub mod config;
pub mod constants;
pub mod dump;
pub mod error;
pub mod medium;
pub mod pulse;
pub mod scan;
pub mod solver;
pub mod spectral;

pub use analysis::{
    CoherenceFit, DemodOptions, Envelope, EnvelopeRecord, FringeRecord, FringeSeries, SeparationMode, SinusoidFit,
    Spectrogram,
};
pub use config::RunConfig;
pub use dump::{DumpKind, Matrix};
pub use error::{Error, Result};
pub use medium::{EnsembleSpec, MediumSpec, Occupations, RateConstants, SpectralGroup};
pub use pulse::{Launch, PlannedDelay, PulseSpec, ScanPlan, TimeAxis, Waveform};
pub use scan::{run_scan, ScanResult, Scenario, Summary};
pub use solver::{GridSettings, GridSpec, Layout, Propagation, PropagationOptions};
