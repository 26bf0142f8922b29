use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("degenerate contrast: c^T (X^T X + rho I)^-1 X^T is zero")]
    DegenerateContrast,

    #[error("noise variance cannot be estimated from OLS residuals with n = {n}, p = {p}")]
    UnestimableVariance { n: usize, p: usize },

    #[error("moment condition violated: t family needs dof > 4, got {dof}")]
    MomentCondition { dof: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
