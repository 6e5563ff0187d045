use thiserror::Error;

/// Errors produced by the simulator and its analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Validation(String),

    #[error("config syntax error at line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("numerical blow-up: non-finite field at cell {cell}, step {step}")]
    NumericalBlowup { cell: usize, step: usize },

    #[error("physics invariant violated at cell {cell}, group {group}, step {step}: {what}")]
    PhysicsInvariant { cell: usize, group: usize, step: usize, what: String },

    #[error("run too short: output tap still carries field at the end of the window ({residual:.3e} of peak)")]
    RunLengthOverflow { residual: f64 },

    #[error("pulse truncated by its time window: {clipped:.3e} of the energy lies outside")]
    EnvelopeTruncation { clipped: f64 },

    #[error("input pulses overlap: envelope overlap {overlap:.3e} exceeds {limit:.1e}")]
    PulseOverlap { overlap: f64, limit: f64 },

    #[error("could not split pump and probe windows: {0}")]
    WindowSplit(String),

    #[error("delay {delay_fs:.3} fs failed: {source}")]
    Delay {
        delay_fs: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Exit-code class used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::ConfigSyntax { .. } => 1,
            Error::Io(_) => 3,
            Error::Delay { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
