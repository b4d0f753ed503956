use rug::Integer;

use crate::lattice::IntVec;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sign change of R_{k} on the bracket")]
    NoSignChange { k: u32 },

    #[error("window violation: {0}")]
    Window(String),

    #[error("precision exhausted at q = {q} (cap {cap_bits} bits)")]
    Precision { q: Integer, cap_bits: u32 },

    #[error("exact tie between lattice points at q = {q}")]
    Tie { q: Integer },

    #[error("primitive completion failed within the radius schedule")]
    Completion { best: Option<IntVec> },

    #[error("synthesis step {step} failed: {reason}")]
    Step { step: usize, reason: String },

    #[error("resource budget exceeded: {0}")]
    Budget(String),

    #[error("enumeration produced more than {cap} points")]
    EnumerationCap { cap: usize },

    #[error("analysis window: {0}")]
    AnalysisWindow(String),

    #[error("too few records: need {need}, got {got}")]
    TooFewRecords { need: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 usage, 3 precision, 4 failed construction or check, 5 I/O or corrupt input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::NoSignChange { .. } | Error::Window(_) => 2,
            Error::Precision { .. } | Error::Tie { .. } => 3,
            Error::Completion { .. }
            | Error::Step { .. }
            | Error::Budget(_)
            | Error::EnumerationCap { .. }
            | Error::AnalysisWindow(_)
            | Error::TooFewRecords { .. } => 4,
            Error::Parse(_) | Error::Io(_) => 5,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
