use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("band |k| <= {n_modes} needs at least {} grid points, got {points}", 2 * n_modes + 1)]
    BandTooLarge { n_modes: usize, points: usize },

    #[error("state is not real-symmetric (u_-k != conj(u_k))")]
    NotRealSymmetric,

    #[error("band mismatch: {left} vs {right}")]
    BandMismatch { left: usize, right: usize },

    #[error("grid of {points} points is not divisible by q = {q}")]
    GridNotDivisible { points: usize, q: u64 },

    #[error("shift {shift} is not a whole number of grid cells")]
    ShiftNotOnGrid { shift: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical abort at t = {time}: {reason}")]
    NumericalAbort { time: f64, reason: String },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("insufficient recording density: {0}")]
    InsufficientRecording(String),

    #[error("recorded times are not uniformly spaced")]
    NonUniformTimes,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Tags an error with the experiment stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage tags stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
