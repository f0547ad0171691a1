use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("input contains non-finite values ({0})")]
    NonFiniteInput(String),
    #[error("design matrix is numerically singular: {0}")]
    SingularDesign(String),
    #[error("design is not orthonormal (max |XᵀX − I| = {0:e})")]
    NotOrthogonal(f64),
    #[error("coordinate descent did not converge after {sweeps} sweeps (kkt residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("training fold has {rows} rows, model of size {size} needs at least {needed}")]
    FoldTooSmall { rows: usize, size: usize, needed: usize },
    #[error("noise variance must be positive, got {0:e}")]
    NonPositiveSigma(f64),
    #[error("dimension table is empty")]
    EmptyTable,
    #[error("unknown criterion `{0}`")]
    UnknownCriterion(String),
    #[error("logistic fit diverged: data look separable (coefficient norm {0:e})")]
    Separation(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularDesign(_)
                | Error::NotOrthogonal(_)
                | Error::NoConvergence { .. }
                | Error::NonPositiveSigma(_)
                | Error::Separation(_)
                | Error::EmptyTable
        )
    }
}
