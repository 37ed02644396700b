use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is defective (non-diagonalizable): {reason}")]
    Defective { reason: String },
    #[error("QR iteration failed to converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("no pseudo-hermitian metric exists for a spectrum that is not conjugation-closed")]
    NotPseudoHermitian,
    #[error("metric not positive definite at t = {time} (control = {control}, min eigenvalue {min_eigenvalue:e})")]
    SingularMetric { time: f64, control: f64, min_eigenvalue: f64 },
    #[error("propagation not converged: change {change:e} at {steps} steps")]
    NotConverged { steps: usize, change: f64 },
    #[error("unitarity relation violated at t = {time}: residual {residual:e}")]
    UnitarityLost { time: f64, residual: f64 },
    #[error("time {t} outside protocol window [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("spectrum is not entirely real (max |Im E| = {max_imag:e})")]
    NonRealSpectrum { max_imag: f64 },
    #[error("partition function is complex: Z = {re} + {im}i")]
    ComplexPartitionFunction { re: f64, im: f64 },
    #[error("{quantity} is not real: imaginary part {imag:e}")]
    NonRealResult { quantity: String, imag: f64 },
    #[error("isentrope not found: {reason}")]
    IsentropeNotFound { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
