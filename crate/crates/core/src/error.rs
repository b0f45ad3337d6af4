use thiserror::Error;

/// Errors raised across the library. Every variant carries enough context to
/// act on without re-running under a debugger.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be at least 1")]
    EmptyDimension,

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unitarity residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    NotUnitary { residual: f64, tolerance: f64 },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("eigensolver did not converge (residual {residual:.3e})")]
    EigenNonConvergence { residual: f64 },

    #[error("principal logarithm undefined: eigenvalue at -1; rotate U by a global phase")]
    LogBranch,

    #[error("oracle scale exceeded: N = {n} > {max}")]
    OracleScale { n: usize, max: usize },

    #[error("enumeration cap exceeded: N = {n} > {max}")]
    EnumerationCap { n: usize, max: usize },

    #[error("pole in Weyl term: phases {mu} and {nu} collide (|difference| = {gap:.3e})")]
    WeylPole { mu: usize, nu: usize, gap: f64 },

    #[error("saddle degeneracy: gamma * exp(i(theta_{i} - theta_{j})) = 1")]
    SaddleDegeneracy { i: usize, j: usize },

    #[error("averaged saddle degenerate: Det(I - gamma <Ad U>) vanishes")]
    AveragedSaddleDegenerate,

    #[error("no spectral gap (gap = {gap:.3e}); lowest-order gap formula inapplicable")]
    NoSpectralGap { gap: f64 },

    #[error("I - T is singular")]
    SingularPropagator,

    #[error("grid pole: x = {x} is a nonzero multiple of 2*pi*N")]
    GridPole { x: f64 },

    #[error("no interior maximum for eps = {eps}; subcritical")]
    Subcritical { eps: f64 },

    #[error("critical regime: no closed form implemented")]
    CriticalRegime,

    #[error("argument {name} = {value} outside its domain: {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid index: {0}")]
    Index(String),

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
