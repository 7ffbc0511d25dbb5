use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("landmark index {index} out of bounds ({count} landmarks)")]
    IndexOutOfBounds { index: usize, count: usize },
    #[error("underdetermined system: {rows} observations for {unknowns} unknowns")]
    Underdetermined { rows: usize, unknowns: usize },
    #[error("message passing diverged at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("empty input")]
    Empty,
}

pub type Result<T> = core::result::Result<T, Error>;
