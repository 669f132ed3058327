use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-physical state: {0}")]
    NonPhysicalState(String),

    #[error("state outside the admissibility cone: {0}")]
    StateOutsideCone(String),

    #[error("wave curve left the admissibility cone at strength {strength}")]
    CurveLeftCone { strength: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("states too far apart: distance {distance} exceeds {limit}")]
    StatesTooFar { distance: f64, limit: f64 },

    #[error("initial total variation {tv} exceeds the admissible bound {limit}")]
    DataTooLarge { tv: f64, limit: f64 },

    #[error("no further front crossings")]
    NoEvent,

    #[error("total variation {tv} exceeds {limit}")]
    BlowUp { tv: f64, limit: f64 },

    #[error("solutions disagree above the last front: {0}")]
    TailMismatch(String),

    #[error("evaluation window outside the domain: {0}")]
    OutOfDomain(String),

    #[error("point ({x}, {y}) lies below the free boundary g(x) = {g}")]
    BelowBoundary { x: f64, y: f64, g: f64 },

    #[error("degenerate Lagrangian transform: rho*u = {rho_u}")]
    DegenerateTransform { rho_u: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
