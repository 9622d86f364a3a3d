use thiserror::Error;

/// Errors raised by kernel construction, inference, sampling and learning.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point set is empty")]
    EmptyPoints,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("item index {index} out of range for a ground set of {n} items")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("subset items must be strictly increasing, got {0:?}")]
    MalformedSubset(Vec<usize>),

    #[error("kernel must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("kernel is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    #[error("kernel is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("symmetric eigensolver did not converge on a {0}x{0} matrix")]
    EigenNoConvergence(usize),

    #[error("ground set of {n} items exceeds the enumeration cap of {cap}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("{phi} is undefined at x = {x}")]
    Domain { phi: String, x: f64 },

    #[error("derivative of {0} is unbounded on a singular submatrix")]
    SingularDerivative(String),

    #[error("operation requires a {expected} spectral function, got {got}")]
    WrongSpectralFunction { expected: &'static str, got: String },

    #[error("normalizing constant is not available for a ground set of {0} items")]
    MissingNormalizer(usize),

    #[error("marginal gain of item {0} is undefined: both sets have zero probability")]
    UndefinedGain(usize),

    #[error("ratio for flipping item {0} is undefined: both sets have zero probability")]
    UndefinedRatio(usize),

    #[error("all importance weights are zero")]
    ZeroWeights,

    #[error("initial state has zero probability under the model")]
    ZeroProbabilityState,

    #[error("training diverged at iteration {iter}: {detail}")]
    Diverged { iter: usize, detail: String },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics themselves rather than of inputs or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenNoConvergence(_)
                | Error::SingularDerivative(_)
                | Error::UndefinedGain(_)
                | Error::UndefinedRatio(_)
                | Error::ZeroWeights
                | Error::ZeroProbabilityState
                | Error::Diverged { .. }
                | Error::NotPositiveSemidefinite(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
