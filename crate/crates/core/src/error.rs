use thiserror::Error;

use crate::eigensolve::SpectrumResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("layout mismatch: {0}")]
    Layout(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("interaction order {order} is not representable with truncation {trunc}")]
    DegenerateTruncation { order: usize, trunc: usize },

    #[error("resonant parameters, dispersive regime undefined: {0}")]
    Resonance(String),

    #[error("operator is not Hermitian (max |H - H^dagger| = {defect:e})")]
    NotHermitian { defect: f64 },

    /// Carries whatever eigenpairs had converged when the iteration budget ran out.
    #[error("eigensolver did not converge after {iterations} iterations ({converged} of {requested} pairs)")]
    IterationLimit {
        iterations: usize,
        converged: usize,
        requested: usize,
        partial: Box<SpectrumResult>,
    },

    #[error("truncation {trunc} too small for coherent amplitude |alpha| = {alpha_abs}")]
    TruncationInsufficient { trunc: usize, alpha_abs: f64 },

    #[error("time propagation failed: {0}")]
    Propagation(String),

    #[error("invalid system configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn layout(msg: impl Into<String>) -> Self {
        Error::Layout(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
