use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("unknown experiment `{name}`; available: {}", available.join(", "))]
    UnknownExperiment { name: String, available: Vec<&'static str> },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(transparent)]
    Core(#[from] mobsense_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
