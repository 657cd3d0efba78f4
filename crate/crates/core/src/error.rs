use thiserror::Error;

/// Errors raised by kernel construction, enumeration, sampling and the checks built on them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel is not Hermitian: max asymmetry {max_asymmetry:e} exceeds tolerance {tol:e}")]
    NotHermitian { max_asymmetry: f64, tol: f64 },

    #[error("eigenvalue {eigenvalue} lies outside [-{tol:e}, 1+{tol:e}]")]
    SpectrumOutOfRange { eigenvalue: f64, tol: f64 },

    #[error("kernel is not an orthogonal projection: {0}")]
    NotProjection(String),

    #[error("eigen-solver failed to converge")]
    ConvergenceFailure,

    #[error("all input vectors are zero")]
    AllZeroInput,

    #[error("unknown label or index: {0}")]
    UnknownLabel(String),

    #[error("included and excluded sets overlap")]
    OverlappingSets,

    #[error("ground set of size {size} exceeds the cap of {cap}")]
    GroundSetTooLarge { size: usize, cap: usize },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("wrong cardinality: expected {expected}, got {got}")]
    WrongCardinality { expected: usize, got: usize },

    #[error("edge {0} is a self-loop")]
    SelfLoop(usize),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("rejection sampler stalled after {attempts} attempts")]
    RejectionStall { attempts: u64 },

    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    #[error("ranges are not orthogonal: |P1 P2| = {0:e}")]
    NotOrthogonal(f64),

    #[error("negative probability {value:e} for subset {mask:#b}")]
    NegativeProbability { mask: u32, value: f64 },

    #[error("cross-check failed: {0}")]
    CrossCheck(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
