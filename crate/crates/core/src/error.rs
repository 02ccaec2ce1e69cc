use thiserror::Error;

/// Errors raised while building geometry, fields, instances or running solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("regularity error: {0}")]
    Regularity(String),

    #[error("axis error: {0}")]
    Axis(String),

    #[error("degenerate tangent plane at node ({i_phi}, {j_t}): |τ_φ × τ_t| = {norm:e}")]
    DegenerateTangent { i_phi: usize, j_t: usize, norm: f64 },

    #[error("value at node ({i_phi}, {j_t}) is off the target surface by {distance:e}")]
    OffTarget { i_phi: usize, j_t: usize, distance: f64 },

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("potential is not differentiable: {0}")]
    NonDifferentiable(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid boundary data: {0}")]
    InvalidBoundary(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("invalid spline table: {0}")]
    InvalidTable(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
