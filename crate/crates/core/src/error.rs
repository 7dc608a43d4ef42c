use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below tolerance")]
    NotPsd { eigenvalue: f64 },

    #[error("matrix is not symmetric: max asymmetry {asymmetry:e}")]
    NotSymmetric { asymmetry: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("outside model domain: {0}")]
    Domain(String),

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("linearization point touches the absorbing set ({0})")]
    LinearizationAtBoundary(String),

    #[error("transition row {row} sums to {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },

    #[error("invalid transition matrix: {0}")]
    InvalidTransition(String),

    #[error("chain is not absorbing: I - T_bar is singular")]
    NonAbsorbing,

    #[error("eigensolver did not converge after {iterations} iterations")]
    EigenNonConvergence { iterations: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("row {row} has zero variance and cannot be standardized")]
    ZeroVariance { row: usize },
}
