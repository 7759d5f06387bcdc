//! Shared error type for the verification kernels.

use thiserror::Error;

/// Errors surfaced by the numerical kernels.
///
/// Variants carry enough context to echo the offending input back to the
/// caller; none of them are recoverable mid-computation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input fails a structural precondition (dimension, domain, range).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A frame or matrix was too ill-conditioned to trust.
    #[error("degenerate input: {what} (condition estimate {cond:.3e})")]
    Degenerate { what: String, cond: f64 },

    /// A crossing of two Lagrangian paths is not regular.
    #[error("degenerate crossing at t = {t:.12e}: near-zero crossing-form eigenvalue {eigenvalue:.3e}")]
    DegenerateCrossing { t: f64, eigenvalue: f64 },

    /// A scan could not isolate an event (crossing, conjugate point, root).
    #[error("resolution failure near t = {t:.12e}: {what}")]
    Resolution { what: String, t: f64 },

    /// Circle action evaluated on the zero section.
    #[error("circle action undefined on the zero section (|v| = 0)")]
    ZeroSection,

    /// Rotation axis of a family stage degenerated.
    #[error("degenerate rotation axis at s = {s}, |v| = {speed:.3e}")]
    DegenerateAxis { s: f64, speed: f64 },

    /// An integrator exceeded its accuracy budget.
    #[error("integration accuracy: {what} defect {defect:.3e} exceeds {tolerance:.3e}")]
    IntegrationAccuracy { what: String, defect: f64, tolerance: f64 },

    /// Fiber graph evaluated at the puncture p = 0.
    #[error("fiber graph undefined at the puncture p = 0")]
    Puncture,

    /// A path strayed too close to the branch locus to trust winding or
    /// root tracking.
    #[error("path within {distance:.3e} of the branch locus")]
    Proximity { distance: f64 },

    /// A profile failed one of its defining conditions.
    #[error("profile inconsistency: {0}")]
    ProfileInconsistency(String),

    /// An operation was asked about a vacuous object (zero cell, empty page).
    #[error("vacuous input: {0}")]
    Vacuous(String),

    /// Path lifting or intersection counting could not be disambiguated.
    #[error("unresolved: {0}")]
    Unresolved(String),

    /// Command-level usage error (unknown suite, bad format).
    #[error("usage: {0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
