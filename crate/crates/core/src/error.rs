use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown preset algebra `{0}`")]
    UnknownPreset(String),

    #[error("parameter outside domain: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("structure functions do not split [{x}] at s = {s} (relative residual {residual:e})")]
    Splitting { x: i64, s: i64, residual: f64 },

    #[error("singular or non-finite evaluation: {0}")]
    NonFinite(String),

    #[error("series did not converge after {terms} terms: {what}")]
    Divergence { what: String, terms: usize },

    #[error("probability ratio undefined: {0}")]
    UndefinedRatio(String),

    #[error("no such formula in this mode: {0}")]
    Unsupported(String),

    #[error("cannot sample: {0}")]
    Sampling(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
