use thiserror::Error;

/// Errors produced by the tailpoint library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TailError {
    #[error("invalid parameter `{param}` for {family}: {value} ({reason})")]
    InvalidParameter {
        family: &'static str,
        param: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("cannot parse distribution `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("unknown key `{key}` for {family}; accepted keys: {accepted}")]
    UnknownKey {
        family: &'static str,
        key: String,
        accepted: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {reason}")]
    Data { line: usize, reason: String },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<TailError>,
    },
}

impl TailError {
    pub fn context(self, context: impl Into<String>) -> Self {
        TailError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        match self {
            TailError::Numeric(_) => false,
            TailError::Context { source, .. } => source.is_input_error(),
            _ => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, TailError>;
