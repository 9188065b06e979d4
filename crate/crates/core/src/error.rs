use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Newton inversion of F (or of psi) did not reach the residual target.
    #[error("inversion failed after {iterations} iterations (residual {residual:e})")]
    Inversion { iterations: usize, residual: f64 },

    #[error("subordination solver did not converge at z = {z} after {iterations} iterations (residual {residual:e})")]
    Solver { z: num_complex::Complex64, iterations: usize, residual: f64, trace: Vec<f64> },

    #[error("resolution error: mass defect {defect:e} exceeds {limit:e}; refine the grid or epsilon schedule")]
    Resolution { defect: f64, limit: f64 },

    #[error("free power continuation failed at x = {x}: {reason}")]
    Power { x: f64, reason: String },

    #[error("stolz fit failed: probe bound not met below alpha = {alpha}")]
    Fit { alpha: f64 },

    #[error("measure has zero first moment and is not in M_*")]
    NotInMStar,

    #[error("evaluation failed at node {node}: {source}")]
    Node {
        node: String,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
