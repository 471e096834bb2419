use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants are grouped by what went wrong rather than where: data problems
/// (schema, rows, sizing, shapes), state problems (using something before it
/// was fitted), and numerical problems (singular systems, divergence,
/// integrity violations).
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("input error: {0}")]
    Input(String),

    #[error("sizing error: {0}")]
    Sizing(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("state error: {0}")]
    State(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("placement error: {0}")]
    Placement(String),

    #[error("grouping error: {0}")]
    Grouping(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("model produced a non-finite prediction for window {window}")]
    NonFinitePrediction { window: usize },

    #[error("budget error: {0}")]
    Budget(String),

    #[error("undefined similarity: {0}")]
    UndefinedSimilarity(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("integrity error: attribution sums to {reconstructed} but the model output is {expected} (|diff| = {diff:e} > {tolerance:e})")]
    Integrity {
        reconstructed: f64,
        expected: f64,
        diff: f64,
        tolerance: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures rooted in numerics (solvers, divergence, budgets)
    /// rather than in the input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_)
                | Error::Divergence { .. }
                | Error::NonFinitePrediction { .. }
                | Error::Budget(_)
                | Error::UndefinedSimilarity(_)
                | Error::DegenerateVariance(_)
                | Error::Integrity { .. }
        )
    }
}
