use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// One violated axiom or invariant found by a validator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: &'static str,
    pub message: String,
}

impl Violation {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Violation {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)
    }
}

/// Validation output: empty means valid.
pub type Report = Vec<Violation>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("subobjects live over different ambient presheaves")]
    AmbientMismatch,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("enumeration exceeded the cap of {cap} {what}")]
    CapExceeded { cap: usize, what: &'static str },
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("{line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("sort error at `{symbol}`: {message}")]
    Sort { symbol: String, message: String },
    #[error("context is not suitable: free variables {missing:?} are not bound")]
    UnsuitableContext { missing: Vec<String> },
    #[error("invalid {what}: {}", .report.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { what: String, report: Report },
    #[error("no stage of the diagram factors the given map")]
    NoStage,
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn unknown(kind: &'static str, name: impl Into<String>) -> Self {
        Error::Unknown {
            kind,
            name: name.into(),
        }
    }

    pub(crate) fn check(what: impl Into<String>, report: Report) -> Result<()> {
        if report.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid {
                what: what.into(),
                report,
            })
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
