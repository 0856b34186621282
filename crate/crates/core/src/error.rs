use thiserror::Error;

/// Errors raised by the geometry, solver, metric and verification layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation point {point} is within {distance:e} of a pole")]
    PoleProximity { point: String, distance: f64 },

    #[error("zero of order {found} at the origin, expected {expected}")]
    OrderMismatch { expected: usize, found: usize },

    #[error("root finder did not converge: {0}")]
    RootFinder(String),

    #[error("ambiguous multiplicities: {0}")]
    MultiplicityAmbiguity(String),

    #[error("homotopy broke down at t = {t} after {halvings} step halvings (last residual {residual:e})")]
    HomotopyBreakdown {
        t: f64,
        halvings: usize,
        residual: f64,
    },

    #[error("a zero left the unit disk (|a| = {modulus}) at t = {t}")]
    ZeroEscape { t: f64, modulus: f64 },

    #[error("recovered critical set does not match the request: {0}")]
    CriticalSetMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("zero-set annotation does not contain the reference zeros: {0}")]
    AnnotationContainment(String),

    #[error("Newton iteration for the Dirichlet problem stalled after {iterations} iterations (residual {residual:e})")]
    PdeNonconvergence { iterations: usize, residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("internal numerical error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
