//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong across the model, discretization, solver and
/// analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix that must be square was not.
    #[error("matrix is not square: {rows} rows but {len} entries")]
    NotSquare { rows: usize, len: usize },

    /// A matrix that must be exactly symmetric was not.
    #[error("matrix is not symmetric at ({i},{j}): {a} vs {b}")]
    NotSymmetric { i: usize, j: usize, a: f64, b: f64 },

    /// A matrix that must be positive semidefinite (within tolerance) was not.
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e} below -{tol:.3e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64, tol: f64 },

    /// A diagonal entry vanishes while an off-diagonal entry in the same
    /// row/column does not, so the relative mixing ratio is undefined.
    #[error("mixing ratio undefined: d[{i}][{j}] = {off} but d[{i}][{i}]*d[{j}][{j}] = 0")]
    UndefinedMixingRatio { i: usize, j: usize, off: f64 },

    /// Two objects that must agree in size did not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A scalar or structural parameter was outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation was requested for a space dimension it does not support.
    #[error("unsupported space dimension k = {k}: {reason}")]
    UnsupportedDimension { k: usize, reason: &'static str },

    /// A field value became non-finite.
    #[error("non-finite value {value} at entry {index}")]
    NonFinite { index: usize, value: f64 },

    /// Time integration blew up in strict overflow mode.
    #[error("instability overflow at time step {step} ({stage})")]
    InstabilityOverflow { step: usize, stage: &'static str },

    /// The inverse transform of a real-expected quantity retained too much
    /// imaginary mass, indicating an internal inconsistency.
    #[error("imaginary residue {residue:.3e} exceeds threshold {threshold:.3e}")]
    ImaginaryResidue { residue: f64, threshold: f64 },

    /// A configuration file or CLI parameter could not be parsed.
    #[error("config error: {0}")]
    Config(String),

    /// Underlying I/O failure (reading configs, writing CSV).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
