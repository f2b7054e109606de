use std::fmt;

/// Crate-wide error type. The CLI maps variants onto exit codes, so keep the
/// classification stable: integrity means a result failed a consistency
/// check, budget means a memory budget could not be honored, checkpoint
/// covers everything about resume files.
#[derive(Debug)]
pub enum Error {
    /// A computed value failed an internal consistency check. Always fatal:
    /// it means a result cannot be trusted, not that an input was malformed.
    Integrity(String),
    /// The caller-supplied byte budget is below the documented minimum.
    Budget { required: u64, available: u64 },
    /// Checkpoint file problems: bad magic, version or checksum, or a
    /// config hash that does not match the current run.
    Checkpoint(String),
    /// The heuristic GCD exhausted all retry attempts.
    Heuristic(String),
    /// Precondition violations on public entry points.
    InvalidInput(String),
    /// Search was stopped at a stage boundary (used by the resume tests).
    Interrupted,
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Integrity(m) => write!(f, "integrity check failed: {m}"),
            Error::Budget { required, available } => {
                write!(f, "byte budget too small: need {required}, have {available}")
            }
            Error::Checkpoint(m) => write!(f, "checkpoint error: {m}"),
            Error::Heuristic(m) => write!(f, "heuristic gcd failed: {m}"),
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
            Error::Interrupted => write!(f, "interrupted at stage boundary"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
