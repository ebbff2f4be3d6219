//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by construction, simulation, reconstruction and analysis.
#[derive(Debug, Error)]
pub enum Error {
    /// The Fock-space truncation is too small for the largest probe: some
    /// probe leaves more Poisson mass beyond level `M` than the caller's
    /// tail tolerance allows.
    #[error("truncation insufficient: probe {probe} has tail mass {tail:.3e} > tolerance {tol:.3e}")]
    TruncationInsufficient { probe: usize, tail: f64, tol: f64 },

    /// The adaptive quadrature for a mixed-probe response row failed to
    /// reach the requested absolute tolerance.
    #[error("quadrature failure: probe {probe} did not reach {tol:.1e} after {panels} panels")]
    QuadratureFailure { probe: usize, tol: f64, panels: usize },

    /// Matrix or vector shapes do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Input statistics contain entries outside [0, 1] beyond numerical slack.
    #[error("infeasible input: statistics entry ({row},{col}) = {value} outside [0,1]")]
    InfeasibleInput { row: usize, col: usize, value: f64 },

    /// The solver hit its iteration limit without meeting the tolerances.
    #[error("solver did not converge: kkt residual {kkt:.3e} after {iterations} iterations")]
    NotConverged { kkt: f64, iterations: usize },

    /// A POVM element has (numerically) zero trace, so it cannot be normalized.
    #[error("zero element: POVM element {0} has trace below 1e-12")]
    ZeroElement(usize),

    /// The bipartite dimension exceeds the desk-scale cap for the
    /// entanglement bound.
    #[error("dimension cap exceeded: {dim} > {cap}")]
    DimensionCap { dim: usize, cap: usize },

    /// The observed joint data admits no physical interpretation at the
    /// stated tolerance (the certified bound exceeds the negativity maximum).
    #[error("inconsistent data: bound {bound:.4} exceeds negativity maximum {max:.4}")]
    InconsistentData { bound: f64, max: f64 },

    /// Measurements flagged as unbounded (quadrature-like) are rejected:
    /// the witness construction only yields useful bounds for finite-support
    /// POVM elements.
    #[error("unbounded-quadrature measurements are not supported by the negativity bound")]
    UnboundedMeasurement,

    /// Domain validation failure (bad parameter, malformed file content, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn dim(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
