use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the domain of the function or distribution.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// Input data is malformed (non-finite samples, inconsistent lengths, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// Matrix or vector dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// An operation required the canonical RT/SF/LT three-state labeling.
    #[error("operation requires the 3-state RT/SF/LT labeling, model has {0} states")]
    Labeling(usize),

    /// A Markov chain is degenerate for the requested construction.
    #[error("degenerate chain: {0}")]
    DegenerateChain(String),

    /// Snapshot could not be encoded or decoded.
    #[error("snapshot: {0}")]
    Snapshot(String),
}

pub type Result<T> = std::result::Result<T, Error>;
