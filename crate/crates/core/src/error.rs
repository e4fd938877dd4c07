use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Each variant maps onto one of the command-line exit codes through
/// [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("quantum-defect channel {channel} is missing from the table")]
    MissingChannel { channel: String },

    #[error("invalid quantum numbers: {0}")]
    InvalidState(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error(
        "laser-excited state is ambiguous: eigenvectors {first} and {second} overlap \
         equally ({overlap:.12}) with the target state"
    )]
    AmbiguousState {
        first: usize,
        second: usize,
        overlap: f64,
    },

    #[error("radial integration failed for {state}: {reason}")]
    Integration { state: String, reason: String },

    #[error("singular geometry: interatomic distance must be positive (got {0} um)")]
    SingularGeometry(f64),

    #[error("matrix is not Hermitian: max |H - H^T| = {deviation:e} exceeds {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("double-excitation probability is zero; the blockade shift is infinite")]
    InfiniteShift,

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("matrix-element cache: {0}")]
    Cache(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::MissingChannel { .. }
            | Error::InvalidState(_)
            | Error::Argument(_)
            | Error::Cache(_)
            | Error::Parse(_)
            | Error::Io(_) => 2,
            Error::Invariant(_)
            | Error::AmbiguousState { .. }
            | Error::Integration { .. }
            | Error::SingularGeometry(_)
            | Error::NotHermitian { .. }
            | Error::Quadrature(_)
            | Error::InfiniteShift
            | Error::Fit(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
