use crate::hilbert::Subsystem;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("Fock cutoff must be at least 1, got {0}")]
    InvalidCutoff(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("subsystem {0:?} is not part of the layout")]
    UnknownSubsystem(Subsystem),

    #[error("subsystem {0:?} appears twice in the layout")]
    DuplicateSubsystem(Subsystem),

    #[error("partial trace needs at least one subsystem to keep")]
    EmptyKeep,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("norm drift {drift:e} at t = {t} exceeds the hard limit")]
    NormDrift { drift: f64, t: f64 },

    #[error("invalid stage/state combination: {0}")]
    InvalidStage(String),

    #[error("exact-step propagation requires rectangular coupling windows")]
    TimeDependentWindow,

    #[error("transmission rate undefined for a protocol of zero duration")]
    ZeroDuration,

    #[error("affine map does not have the block structure (largest off-pattern entry {0:e})")]
    NotBlockStructured(f64),

    #[error("displacement with cos(theta) = 0 cannot be inverted for a nonzero xy block")]
    SingularDisplacement,

    #[error("map is not completely positive (Choi eigenvalue {0:e})")]
    NotCompletelyPositive(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors that come from the numerics rather than from the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepUnderflow { .. }
                | Error::NormDrift { .. }
                | Error::SingularDisplacement
                | Error::NotCompletelyPositive(_)
        )
    }
}
