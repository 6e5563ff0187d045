//! Observables extracted from output-facet field records.

pub mod envelope;
pub mod fit;
pub mod records;
pub mod xfrog;

pub use envelope::{analytic_envelope, default_cutoff, demodulate, DemodOptions, Envelope, EnvelopeRecord};
pub use fit::{fit_coherence, fit_sinusoid, fringe_series, CoherenceFit, FringeSeries, SinusoidFit};
pub use records::{fringe_record, FringeRecord, SeparationMode};
pub use xfrog::{xfrog_trace, Spectrogram};
