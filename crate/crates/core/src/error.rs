use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("point {point} lies within {distance:.3e} of the boundary (minimum {minimum:.3e})")]
    TooCloseToBoundary {
        point: String,
        distance: f64,
        minimum: f64,
    },

    #[error("section does not vanish on the z1-boundary: node {node} has |f| = {value:.3e} > {tolerance:.3e}")]
    BoundaryNotVanishing {
        node: usize,
        value: f64,
        tolerance: f64,
    },

    #[error("exponent p = {p} exceeds q = {q}")]
    ExponentOrder { p: f64, q: f64 },

    #[error("metric is not positive definite at node {node}")]
    NotPositiveDefinite { node: usize },

    #[error("iteration exponent N = {0} must be at least 3")]
    InvalidIterationExponent(u32),

    #[error("no admissible curvature budget gamma > 0 for this ledger")]
    NoAdmissibleGamma,

    #[error("hypothesis unreachable at this resolution: budget {budget:.3e} >= gamma {gamma:.3e} at radius {radius}")]
    BudgetUnreachable { budget: f64, gamma: f64, radius: f64 },

    #[error("least-squares solver stopped after {iterations} iterations with relative residual {residual:.3e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("trial form violates the boundary condition of component {component} at node {node}")]
    InadmissibleForm { component: usize, node: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
