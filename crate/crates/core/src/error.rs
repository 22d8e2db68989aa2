use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or out-of-contract input.
    Input,
    /// The input is well formed but violates a geometric precondition
    /// (basepoint outside `0 < |γ(0)| < ab`, path meets `Ω`, ...).
    Validation,
    /// A numerical procedure failed to reach its tolerance.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown germ `{0}`")]
    UnknownGerm(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("point {point} lies outside the disc of convergence (radius {radius})")]
    OutsideDisc { point: Complex64, radius: f64 },

    #[error("singular set has no nonzero members")]
    NoNonzeroMembers,

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("basepoint modulus {modulus} violates 0 < |γ(0)| < ab = {bound}")]
    BasepointOutOfRange { modulus: f64, bound: f64 },

    #[error("path comes within {distance:e} of the singular point {point}")]
    PathHitsSingularity { point: Complex64, distance: f64 },

    #[error("segment {from} -> {to} passes within {distance:e} of the singular point {singular}")]
    SegmentTooClose {
        from: Complex64,
        to: Complex64,
        singular: Complex64,
        distance: f64,
    },

    #[error("field variant requires a finite singular set for the second factor")]
    FiniteBRequired,

    #[error("field denominator {value:e} at t = {t}, ζ = {zeta}: path too close to Ω")]
    DegenerateField { t: f64, zeta: Complex64, value: f64 },

    #[error("integrator failed: {0}")]
    Integrator(String),

    #[error("tracker failed for node s = {s} at t = {t}: {source}")]
    NodeTracking {
        s: f64,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("contour refinement limit reached ({nodes} nodes) at t = {t}")]
    RefinementLimit { nodes: usize, t: f64 },

    #[error("branch mismatch of {mismatch:e} between neighbouring nodes at s = {s}")]
    BranchMismatch { s: f64, mismatch: f64 },

    #[error("quadrature did not converge: estimate {estimate:e} above tolerance {tolerance:e}")]
    ToleranceNotMet { estimate: f64, tolerance: f64 },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::UnknownGerm(_)
            | Error::InvalidParameter(_)
            | Error::Parse(_)
            | Error::InvalidPath(_)
            | Error::FiniteBRequired
            | Error::NoNonzeroMembers
            | Error::Io(_)
            | Error::Json(_) => ErrorKind::Input,
            Error::OutsideDisc { .. }
            | Error::BasepointOutOfRange { .. }
            | Error::PathHitsSingularity { .. }
            | Error::SegmentTooClose { .. }
            | Error::DegenerateField { .. } => ErrorKind::Validation,
            Error::NodeTracking { source, .. } => match source.kind() {
                ErrorKind::Input => ErrorKind::Input,
                _ => ErrorKind::Numerical,
            },
            Error::Integrator(_)
            | Error::RefinementLimit { .. }
            | Error::BranchMismatch { .. }
            | Error::ToleranceNotMet { .. } => ErrorKind::Numerical,
        }
    }
}
