use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate element {element} (signed area {area:e})")]
    DegenerateElement { element: usize, area: f64 },

    #[error("finite element space is empty: {0}")]
    EmptySpace(String),

    #[error("factorization broke down at row {row} (pivot {pivot:e})")]
    Factorization { row: usize, pivot: f64 },

    #[error("eigensolver did not converge in {iterations} iterations (worst relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("inconsistent bracket for eigenvalue {k}: lower {lower} > upper {upper}")]
    InconsistentBracket { k: usize, lower: f64, upper: f64 },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("interval {index}: {source}")]
    AtInterval {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn at(index: usize, source: Error) -> Self {
        Error::AtInterval {
            index,
            source: Box::new(source),
        }
    }
}
