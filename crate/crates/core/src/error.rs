use thiserror::Error;

/// Errors produced anywhere in the analysis chain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    #[error("degenerate variance: second moment {mu2} does not exceed squared mean {mu1_sq}")]
    DegenerateVariance { mu1_sq: f64, mu2: f64 },

    #[error(
        "series truncated at total order {order} without meeting tolerance (partial sum {partial})"
    )]
    Truncation { order: usize, partial: f64 },

    #[error("quadrature failed to converge: estimate {value}, error estimate {error} after {intervals} intervals")]
    Quadrature {
        value: f64,
        error: f64,
        intervals: usize,
    },

    #[error("too few samples: need {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            func,
            msg: msg.into(),
        }
    }

    /// Wraps the error with a note about where it surfaced.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Domain { .. }
            | Error::DegenerateVariance { .. }
            | Error::Truncation { .. }
            | Error::Quadrature { .. }
            | Error::TooFewSamples { .. } => true,
            Error::Context { source, .. } => source.is_numeric(),
            Error::Config(_) | Error::Io(_) | Error::Json(_) => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
