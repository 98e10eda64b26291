use thiserror::Error;

/// Errors raised by the selection engine and the simulation laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("column {index} is constant (collinear with the intercept)")]
    ConstantColumn { index: usize },

    #[error("response is constant; R² is undefined")]
    ConstantResponse,

    #[error("invalid model index: {0}")]
    InvalidModel(String),

    #[error("design columns {columns:?} are rank deficient together with the intercept")]
    SingularModel { columns: Vec<usize> },

    #[error("column {column} is collinear with the current model span")]
    Collinear { column: usize },

    #[error("both models saturate (R² = 1); the Bayes factor is indeterminate")]
    IndeterminateComparison,

    #[error("numerical integration did not converge (error estimate {estimate:.3e})")]
    Quadrature { estimate: f64 },

    #[error("enumeration needs {required} models, budget is {budget}; use stochastic search")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("insufficient samples: need {needed}, have {have}")]
    InsufficientSamples { needed: usize, have: usize },
}

impl Error {
    /// True for failures of a numerical routine rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::IndeterminateComparison
                | Error::SingularModel { .. }
                | Error::Collinear { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
