use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("empty band: no harmonic of the frequency grid lies inside the band")]
    EmptyBand,

    #[error("{what} = {value} is outside the admissible range [{lo}, {hi}]")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("path is not strictly increasing: {0}")]
    Monotonicity(String),

    #[error("lattice error: {0}")]
    Lattice(String),

    #[error("replica sum diverges: {0}")]
    Divergence(String),

    #[error("closed form requires odd a (got a = {0}); use the quadrature route")]
    EvenRatio(u32),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("no gain from mobility in this regime: {0}")]
    NoReduction(String),

    #[error("outside the model: {0}")]
    OutOfModel(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
