use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is out of range or inconsistent.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A linear system that should be regular turned out numerically singular.
    #[error("singular system in {0}")]
    Singular(&'static str),

    /// No closed-form reference value is known for this configuration.
    #[error("no closed-form reference for scenario `{0}`")]
    UnsupportedOracle(&'static str),

    /// Configuration file problems (parse or validation).
    #[error("config: {0}")]
    Config(String),

    /// The linear-programming subproblem failed to solve.
    #[error("linear program: {0}")]
    Lp(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
