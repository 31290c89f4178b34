use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at position {pos}: expected {expected}, found {found}")]
    Syntax {
        pos: usize,
        expected: String,
        found: String,
    },
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("sigma is not defined at {0:?}")]
    MissingKey(Vec<f64>),
    #[error("sigma evaluates to a negative value {value} at {x:?}")]
    NegativeSigma { x: Vec<f64>, value: f64 },
    #[error("graph is empty")]
    EmptyGraph,
    #[error("{0:?} is not in the domain of the graph")]
    NotInDomain(Vec<f64>),
    #[error("pair is not in the graph")]
    NotInGraph,
    #[error("the first graph is not contained in the second")]
    NotAnExtension,
    #[error("graph is not sigma-monotone (margin {margin})")]
    NotSigmaMonotone { margin: f64 },
    #[error("unsupported operator kind: {0}")]
    UnsupportedKind(String),
    #[error("no resolvent solution in range (smallest residual {best_residual} at x = {at})")]
    NoSolutionInRange { best_residual: f64, at: f64 },
    #[error("Fitzpatrick function has no finite evaluation in the search box")]
    NowhereFinite,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("json error: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
