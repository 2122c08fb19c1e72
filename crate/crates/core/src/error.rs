use thiserror::Error;

/// Errors raised by the solver and its drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate interpolation basis: {0}")]
    DegenerateBasis(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("initialization produced a non-finite value at {0}")]
    Initialization(String),
    #[error("no finite stable time step: every direction has zero maximum speed")]
    UnboundedTimeStep,
    #[error("particle left subdomain {subdomain}: position {position} outside [{lo}, {hi}]")]
    Containment { subdomain: usize, position: f64, lo: f64, hi: f64 },
    #[error("non-finite state: {0}")]
    Numerical(String),
    #[error("ill-posed interpolant: {0}")]
    IllPosedInterpolant(String),
    #[error("characteristic origin {origin} is beyond the neighbours of subdomain {subdomain}")]
    BacktrackRange { subdomain: usize, origin: f64 },
    #[error("particles crossed in subdomain {subdomain}: {reason}")]
    ParticleCrossing { subdomain: usize, reason: String },
    #[error("global exact integral {0:e} too small for a ratio norm")]
    DegenerateNormalization(f64),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors that stem from the run configuration rather than the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidArgument(_) | Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
