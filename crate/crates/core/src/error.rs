use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Malformed input file or stream. `line` is 1-based when known.
    #[error("format error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format { line: Option<usize>, message: String },

    #[error("unclassifiable phrase: {0}")]
    Unclassifiable(String),

    #[error("subgraph growth stopped at {cues} cues and {targets} targets, {shortfall} nodes short of {requested}")]
    PartialSample {
        requested: usize,
        cues: usize,
        targets: usize,
        shortfall: usize,
    },

    #[error("sampling aborted: {0}")]
    SamplingAborted(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: msg.into(),
        }
    }

    /// True for errors caused by bad input (arguments, files, formats) rather
    /// than by an experiment failing at runtime.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_) | Error::Format { .. } | Error::Io(_) | Error::Json(_) | Error::Csv(_)
        )
    }
}
