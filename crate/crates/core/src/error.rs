//! Error taxonomy shared across the crate.

/// Crate-wide error type.
///
/// `Domain` flags inputs outside an operation's contract, `Synthesis` flags
/// phase-extraction failures, `Numeric` flags solver non-convergence,
/// `Resource` flags dimension budgets, and `Certificate` flags a failed
/// optimality-certificate check (which would indicate an implementation bug,
/// never an expected runtime condition).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("synthesis error: {0}")]
    Synthesis(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error("certificate error: {0}")]
    Certificate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
