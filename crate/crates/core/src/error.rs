//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input file does not match the expected schema (headers, column set, duplicate names).
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell or field could not be parsed; carries the 1-based data row where it happened.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    /// A configuration value or argument combination is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Input data carry no usable information (zero total weight, empty matrix, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// An item has all-affirmed or all-denied responses and its severity cannot be estimated.
    #[error("item '{item}' is not identifiable: {reason}")]
    NonIdentifiable { item: String, reason: String },

    /// Iterative estimation stopped at the iteration cap without meeting the gradient tolerance.
    #[error("estimation did not converge after {iterations} iterations (max |gradient| = {gradient_norm:.3e})")]
    Convergence {
        iterations: usize,
        gradient_norm: f64,
    },

    /// Anchor severities have zero spread, so no scale transformation exists.
    #[error("degenerate anchor set: {0}")]
    DegenerateAnchor(String),

    /// Iterative anchor selection removed items until fewer than two remained.
    #[error("anchor set exhausted after removing {} item(s): {}", removals.len(), format_removals(removals))]
    AnchorExhausted { removals: Vec<(String, f64)> },

    /// A value lies outside the mathematical domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Person parameters do not cover every raw score with positive mass.
    #[error("coverage error: {0}")]
    Coverage(String),

    /// Fit diagnostics cannot be computed (e.g. zero variance of abilities).
    #[error("diagnostics error: {0}")]
    Diagnostics(String),

    /// Too many bootstrap replications failed for the standard errors to be trusted.
    #[error("unstable pipeline: {failed} of {total} replications failed (first failure: {first_failure})")]
    UnstablePipeline {
        failed: usize,
        total: usize,
        first_failure: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_removals(removals: &[(String, f64)]) -> String {
    removals
        .iter()
        .map(|(code, d)| format!("{code} ({d:.3})"))
        .collect::<Vec<_>>()
        .join(", ")
}
