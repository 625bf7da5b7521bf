use thiserror::Error;

/// Errors raised by the array model, statistics, criteria and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("validation error: {0}")]
    Validation(String),

    /// A Gram matrix (A*A or TT*) could not be inverted reliably.
    #[error("singular matrix: {what} (condition estimate {condition:.3e})")]
    Singular { what: &'static str, condition: f64 },

    #[error("degenerate polynomial: leading coefficient c_{degree} is zero")]
    DegenerateDegree { degree: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
