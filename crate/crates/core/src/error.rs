use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("source and target are not line-aligned: {source_lines} vs {target_lines} lines")]
    Alignment {
        source_lines: usize,
        target_lines: usize,
    },

    #[error("line {line}: blank on the {side} side only")]
    OneSidedBlank { line: usize, side: &'static str },

    #[error("corpus has no usable sentences")]
    EmptyCorpus,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ground set has {size} sentences; the brute-force oracle is a test oracle capped at {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input or configuration rather than
    /// runtime failures.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::SizeCap { .. })
    }
}
