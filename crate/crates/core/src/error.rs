use thiserror::Error;

use crate::kernels::CutoffKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("J_{order} is not supported for the {kind} cutoff (maximum order {max})")]
    UnsupportedOrder {
        kind: CutoffKind,
        order: usize,
        max: usize,
    },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("circulant embedding is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e}, embedding size {size})")]
    NotPositiveSemidefinite { min_eigenvalue: f64, size: usize },

    #[error("integration diverged at step {step} (t = {time})")]
    Diverged { step: usize, time: f64 },

    #[error("ill-posed truncation at t = {time} (delta = {delta}): {reason}")]
    IllPosedTruncation {
        time: f64,
        delta: f64,
        reason: String,
    },

    #[error("effective curvature {curvature} is not positive with the bare potential; use the renormalized counterterm or a stiffer potential")]
    InvertedCurvature { curvature: f64 },

    #[error("bath discretization too coarse: {reason}; use at least {suggested_modes} modes")]
    TooFewModes {
        reason: String,
        suggested_modes: usize,
    },

    #[error("relative energy drift {drift:e} exceeds tolerance {tolerance:e}")]
    EnergyDrift { drift: f64, tolerance: f64 },

    #[error("{failed} of {total} trajectories diverged (more than 1%)")]
    TooManyDiverged { failed: usize, total: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the requested configuration rather than by
    /// the numerics of a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Domain(_)
                | Error::UnsupportedOrder { .. }
                | Error::Unsupported(_)
                | Error::InvertedCurvature { .. }
                | Error::TooFewModes { .. }
                | Error::Empty(_)
        )
    }
}
