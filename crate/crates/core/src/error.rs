use thiserror::Error;

/// Everything that can go wrong inside the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown level label `{0}`")]
    UnknownLabel(String),
    #[error("expected {expected} ensemble labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("Hilbert space of {dim} amplitudes exceeds the cap of {cap}")]
    TooLarge { dim: usize, cap: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid site: {0}")]
    InvalidSite(String),
    #[error("states belong to different level schemes")]
    SchemeMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("time {t:e} s outside the pulse window [0, {duration:e}] s")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("malformed state snapshot: {0}")]
    Snapshot(String),
    #[error("step size underflow at t = {t:e} s (h = {h:e} s)")]
    StepUnderflow { t: f64, h: f64 },
    #[error("exceeded the maximum of {0} integration steps")]
    MaxSteps(usize),
    #[error("non-finite amplitude encountered at t = {t:e} s")]
    NonFinite { t: f64 },
    #[error("pulse segments are not contiguous: {0}")]
    SegmentGap(String),
    #[error("eigenvalue tracking ambiguous: {0}")]
    EigenTracking(String),
    #[error("operator is not unitary (max deviation {0:e})")]
    NonUnitary(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepUnderflow { .. }
                | Error::MaxSteps(_)
                | Error::NonFinite { .. }
                | Error::EigenTracking(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
