//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// An argument left the mathematical domain of an operation
    /// (arclength outside the period, strip depth out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The strip would self-intersect: epsilon exceeds the injectivity
    /// bound eps0 of the inward normal map.
    #[error("epsilon {epsilon} exceeds injectivity bound eps0 = {eps0}")]
    Eps0Violation { epsilon: f64, eps0: f64 },

    /// Invalid configuration value (bad preset name, unsupported exponent, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Configuration file syntax error, with 1-based line number.
    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    /// An iterative numerical procedure failed (projection, factorization,
    /// eigensolver, quadrature refinement).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Mesh generation or validation failure.
    #[error("mesh error: {0}")]
    Mesh(String),

    /// Newton iteration on the stationary problem did not converge.
    #[error("newton diverged after {iterations} iterations, last residual {residual:e}")]
    NewtonDiverged { iterations: usize, residual: f64 },

    /// A continued equilibrium left the trust ball around the limit point.
    #[error(
        "branch escaped at epsilon {epsilon}: distance {distance:e} exceeds delta {delta:e} \
         (delta too small or epsilon too large)"
    )]
    BranchEscape { epsilon: f64, distance: f64, delta: f64 },

    /// Equilibrium sets of different cardinality cannot be matched.
    #[error("equilibrium count mismatch: {left} vs {right}")]
    CountMismatch { left: usize, right: usize },

    /// Time stepping produced a non-finite state.
    #[error("blow-up: non-finite state at t = {t}")]
    Blowup { t: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
