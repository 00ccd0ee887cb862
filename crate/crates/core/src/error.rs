use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid subsystem dimensions: {0}")]
    InvalidDimensions(&'static str),

    #[error("matrix contains NaN or infinite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (max |M - M^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("state vector norm is {norm}, expected 1")]
    NotNormalized { norm: f64 },

    #[error("subsystem index {index} out of range for {len} subsystems")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("Kraus operators are not trace preserving (max |sum K^dag K - I| = {deviation:e})")]
    IncompleteKraus { deviation: f64 },

    #[error("Kraus set is empty")]
    EmptyKraus,

    #[error("Choi state marginal on the input side is not maximally mixed (deviation {deviation:e})")]
    ChoiMarginal { deviation: f64 },

    #[error("matrix is not unitary (max |U U^dag - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("parameter `{name}` = {value} is out of range")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("unknown builtin channel `{0}`")]
    UnknownChannel(String),

    #[error("Bloch-sphere quadrature needs a qubit channel, got dimension {dim}")]
    QuadratureUnsupported { dim: usize },

    #[error("extension dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("state is not bipartite")]
    NotBipartite,

    #[error("extension does not induce a trace-preserving map (A marginal off by {deficit:e})")]
    NotTracePreserving { deficit: f64 },

    #[error("output marginals differ by {spread:e} in trace distance")]
    MarginalMismatch { spread: f64 },

    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { residual: f64, iterations: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
