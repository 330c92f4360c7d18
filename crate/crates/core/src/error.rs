use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matching conditions do not hold (residual {residual:.3e})")]
    NoMatching { residual: f64 },

    #[error("matrix sI - A is singular at the requested point")]
    Singular,

    #[error("matrix is not Hurwitz (max Re λ = {max_real:.6e})")]
    NotHurwitz { max_real: f64 },

    #[error("frequency grid is empty")]
    EmptyGrid,

    #[error("matrix is not symmetric positive definite")]
    NotSpd,

    #[error("no feasible certificate found: {0}")]
    Infeasible(String),

    #[error("state diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("scenario: {0}")]
    Scenario(String),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
