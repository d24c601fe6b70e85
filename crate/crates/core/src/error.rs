use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced anywhere in the toolkit.
///
/// Variants split into input problems (bad indices, malformed files,
/// invalid configuration) and numerical problems (quantities that are not
/// defined for the supplied counts). [`Error::is_numerical`] tells them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("zero-cell posterior: cell ({row}, {col}) has zero count, formulas divide by n_ij")]
    ZeroCell { row: usize, col: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined fill: row {row} has {missing} partially observed instances but no complete ones")]
    UndefinedFill { row: usize, missing: f64 },

    #[error("infeasible beta fit: variance {variance} must be below mean*(i_max-mean) = {bound}")]
    InfeasibleFit { variance: f64, bound: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the numbers rather than by the input shape.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroCell { .. }
                | Error::Domain(_)
                | Error::UndefinedFill { .. }
                | Error::InfeasibleFit { .. }
                | Error::InsufficientData(_)
        )
    }
}
