use std::fmt;

/// Errors raised across the crate.
///
/// The variants line up with the command-line exit codes: parameter
/// problems exit with 2, everything data- or estimation-related with 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A law or model parameter lies outside its domain.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Input samples violate an estimator's or operation's preconditions.
    #[error("data error: {0}")]
    Data(String),

    /// An iterative routine failed to produce a finite answer.
    #[error("numeric error: {message} ({diagnostics})")]
    Numeric {
        message: String,
        diagnostics: Diagnostics,
    },

    /// A corpus references structure that does not exist.
    #[error("structural error at line {line}: {message}")]
    Structural { line: usize, message: String },

    /// A corpus line could not be decoded.
    #[error("malformed input at line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>, diagnostics: Diagnostics) -> Self {
        Error::Numeric {
            message: msg.into(),
            diagnostics,
        }
    }

    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) => 2,
            _ => 3,
        }
    }
}

/// Key/value trail left by a failed numeric routine.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics(pub Vec<(&'static str, f64)>);

impl Diagnostics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &'static str, value: f64) -> Self {
        self.0.push((key, value));
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}
