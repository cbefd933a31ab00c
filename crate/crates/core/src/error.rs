use thiserror::Error;

/// Errors raised by the library. Variants map onto CLI exit codes:
/// input problems are recoverable by fixing the input, resource problems
/// by raising a cap.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("not graphical: {0}")]
    NotGraphical(String),
    #[error("inadmissible distribution: {0}")]
    Inadmissible(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("infeasible target: {0}")]
    Infeasible(String),
    #[error("component is not a tree: {0}")]
    NonTree(String),
    #[error("resource cap exceeded: {0}")]
    CapExceeded(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by configured limits rather than bad input.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::CapExceeded(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(format!($($arg)*)))
    };
}
pub(crate) use bail;
