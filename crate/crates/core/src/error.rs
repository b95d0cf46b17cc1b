use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("index out of range: {0}")]
    Index(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e}): {context}")]
    Convergence {
        iterations: usize,
        residual: f64,
        context: String,
    },

    #[error("numerical breakdown: {0}")]
    Numerical(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("nonpositive decay slope {slope:.3e}: state is not localized")]
    NonpositiveSlope { slope: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// True for errors that come from the numerics rather than from inputs or I/O.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. }
                | Error::Numerical(_)
                | Error::InsufficientData(_)
                | Error::NonpositiveSlope { .. }
                | Error::DegenerateInput(_)
        )
    }
}
