//! Error taxonomy shared by the whole workspace.
//!
//! The split mirrors the CLI's exit codes: parse/validation problems are
//! distinguished from contract violations and from resource-cap refusals so
//! callers can report them differently.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation
    /// (e.g. conditioning on a zero-probability value).
    #[error("domain error: {0}")]
    Domain(String),

    /// A precondition of an operation was violated by the caller
    /// (e.g. a transform that requires an efficient verifier).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Structurally well-formed input that fails a semantic check
    /// (e.g. sampler weights not summing to one).
    #[error("validation error: {0}")]
    Validation(String),

    /// Malformed text input, with a 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// An exact construction would exceed the configured support cap.
    #[error("support cap exceeded: construction needs {needed} outcomes, cap is {cap}")]
    Resource { needed: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
