//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Error`]. The variants
//! mirror the three ways a computation can go wrong here: the parameter set
//! itself is invalid, a requested relay gain puts the inter-relay feedback
//! loop outside its stability region, or a numerical procedure (quadrature,
//! simulation estimate, file round-trip) cannot deliver the requested
//! accuracy.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A power or variance that must be strictly positive is not.
    #[error("{field} must be strictly positive, got {value}")]
    NonPositivePower { field: &'static str, value: f64 },

    /// An amplitude gain that must be nonnegative is negative.
    #[error("{field} must be nonnegative, got {value}")]
    NegativeGain { field: &'static str, value: f64 },

    /// The relay processing delay must be at least one symbol.
    #[error("relay delay lambda must be at least 1 symbol, got {value}")]
    ZeroDelay { value: u64 },

    /// The relay gain violates the feedback-loop stability condition
    /// `2*mu*g < 1`. Raised inclusively at the marginal point `2*mu*g = 1`,
    /// where the relay output power and the rate integrals diverge.
    #[error("relay gain g = {gain} is unstable: 2*mu*g = {loop_gain} >= 1 (mu = {mu})")]
    UnstableGain { mu: f64, gain: f64, loop_gain: f64 },

    /// An integrand produced NaN or an infinity at a grid point.
    #[error("integrand is not finite at {axis} = {at}")]
    NonFinite { axis: &'static str, at: f64 },

    /// Grid doubling hit the point budget before the tolerance was met.
    /// Carries the best available value so callers can decide whether the
    /// achieved accuracy is still useful.
    #[error(
        "quadrature did not converge: relative change {est_error:.3e} > tolerance {rel_tol:.3e} \
         at {points} points (best value {value:.17e})"
    )]
    NoConvergence {
        value: f64,
        est_error: f64,
        rel_tol: f64,
        points: usize,
    },

    /// A simulation-derived estimate was requested from too little data.
    #[error("insufficient samples: {detail}")]
    InsufficientSamples { detail: String },

    /// A configuration value outside the domain the operation supports.
    #[error("invalid {field}: {detail}")]
    InvalidConfig { field: &'static str, detail: String },

    /// A trajectory file is malformed (bad magic, truncated payload, or
    /// inconsistent header dimensions).
    #[error("malformed trajectory file: {detail}")]
    MalformedTrajectoryFile { detail: String },

    /// Underlying I/O failure while reading or writing a trajectory dump.
    #[error("trajectory i/o failed: {0}")]
    Io(#[from] std::io::Error),
}
