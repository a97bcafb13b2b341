//! An exact, desk-scale laboratory for one-way puzzles.
//!
//! Everything in this crate is built on one substrate: explicit finite
//! probability distributions with exact rational weights ([`dist::FiniteDist`]).
//! Samplers, verifiers, adversaries, and generators are all finite tables, so
//! every quantity of interest — correctness error, optimal break probability,
//! statistical distance, KL divergence — is computed by exhaustive enumeration
//! rather than sampling.
//!
//! Module map:
//! - [`dist`]: distributions, channels, entropy/KL/SD, products, the
//!   likelihood-ratio distinguisher, chain-rule decomposition.
//! - [`puzzle`]: the puzzle abstraction (joint key/puzzle sampler plus a
//!   verifier acceptance table) and its exact measurements.
//! - [`transforms`]: puzzle-to-puzzle operators (repetition, relaxation,
//!   guarding, combiners, universal and non-uniform combinations) with exact
//!   parameter bookkeeping.
//! - [`efid`]: the entropy-flattening and extraction pipeline connecting
//!   puzzles to pairs of statistically far distributions.
//! - [`primitives`]: reductions to and from one-time signatures,
//!   non-interactive commitments, and pseudodeterministic generators.
//! - [`fmt`]: the line-oriented text formats and CSV/JSON reports.
//! - [`corpus`]: seeded random generators for test corpora.

pub mod corpus;
pub mod dist;
pub mod efid;
pub mod error;
pub mod fmt;
pub mod primitives;
pub mod puzzle;
pub mod token;
pub mod transforms;

pub use error::{Error, Result};

/// Default cap on the number of outcomes any product construction may build.
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

/// Default tolerance for floating-point (entropy / KL) comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
