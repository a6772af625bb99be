use num_complex::Complex64;
use thiserror::Error;

use crate::quad::SmearValue;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PacketError {
    #[error("spacetime dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("packet arrays do not match the dimension")]
    ShapeMismatch,
    #[error("width matrix is not symmetric")]
    NotSymmetric,
    #[error("width matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("packet contains non-finite numbers")]
    NonFinite,
    #[error("packets must share center, widths and phase shift to be added")]
    MismatchedGaussian,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    #[error("tolerance not met: best value {} with error estimate {}", .0.value, .0.err_est)]
    ToleranceNotMet(SmearValue),
    #[error("pole {pole} lies within 1e-6 of the window [{lo}, {hi}]")]
    PoleAtBoundary { pole: f64, lo: f64, hi: f64 },
    #[error("finite-part methods disagree: taylor {taylor}, pole derivative {derivative} (gap {gap:e}, combined error {combined:e})")]
    InconsistentFinitePart {
        taylor: Complex64,
        derivative: Complex64,
        gap: f64,
        combined: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("expected {expected} arguments, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular factor in variable {var} comes within {distance:e} of the mass shell on the packet support")]
    PoleProximity { var: usize, distance: f64 },
    #[error("term {term} pins an on-shell variable through the conservation delta; use the regularized evaluator")]
    Overdetermined { term: usize },
    #[error("invalid factor: {0}")]
    InvalidFactor(String),
    #[error("regularization did not converge: {0}")]
    RegularizationNotConverged(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Packet(#[from] PacketError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("kernel evaluated at |x| = {0:e}, too close to the origin")]
    OriginSingularity(f64),
    #[error("points {0} and {1} coincide")]
    CoincidentPoints(usize, usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Top-level error for the limit, scattering and perturbation engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("deviations do not decrease along the time grid: {0:?}")]
    NonDecaying(Vec<f64>),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Packet(#[from] PacketError),
}
