//! Crate-wide error type.

use thiserror::Error;

/// Errors shared by all modules.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Vector/matrix sizes do not match the metric or form.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A precondition on the input data is violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A Gram matrix or determinant fell below the degeneracy threshold.
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// A metric-self-adjoint operator could not be diagonalised over R.
    #[error("diagonalization failure: {0}")]
    Diagonalization(DiagonalizationFailure),

    /// Newton correction did not converge.
    #[error("newton did not converge: residual {residual:.3e} after {iterations} iterations")]
    NewtonDivergence { residual: f64, iterations: usize },

    /// The time integration produced NaN/overflow or lost well-posedness.
    #[error("numerical blow-up at t = {time:.6}: {reason}")]
    BlowUp { time: f64, reason: String },
}

/// Why a Lorentz eigenbasis could not be produced.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagonalizationFailure {
    /// The operator has genuinely complex eigenvalues.
    #[error("complex spectrum")]
    ComplexSpectrum,
    /// Real spectrum but a defective (non-semisimple) eigenvalue.
    #[error("non-semisimple eigenvalue")]
    NonSemisimple,
    /// The metric restricted to an eigenspace is degenerate.
    #[error("degenerate eigenspace metric")]
    DegenerateEigenspace,
}

pub type Result<T> = std::result::Result<T, Error>;
