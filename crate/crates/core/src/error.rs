use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid kernel spec: {0}")]
    InvalidSpec(String),
    #[error("point {point:?} lies outside the domain of the {model} model")]
    OutOfDomain { model: &'static str, point: Vec<f64> },
    #[error("lattice sphere |lambda|^2 = {0} is empty")]
    EmptyLatticeSphere(u64),
    #[error("truncation below minimum: {0}")]
    Truncation(String),
    #[error("derivative of order {0} not available for this kernel away from the diagonal")]
    UnsupportedDerivative(usize),
    #[error("coefficient sidecar: {0}")]
    Sidecar(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate frame: smallest singular value {0:e} below threshold")]
    Degenerate(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("grid has {0} cells per axis, above the cap of 2048")]
    GridCap(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("extraction requires codimension {expected}, field has {found}")]
    Codimension { expected: String, found: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("extraction fault: {0}")]
    Fault(String),
    #[error("geometry file: {0}")]
    Format(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("mesh is not a closed 2-manifold: {0}")]
    NonManifold(String),
    #[error("polyline needs at least 3 distinct vertices, found {0}")]
    TooFewVertices(usize),
    #[error("expected {0}")]
    WrongKind(&'static str),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("extraction unusable for the window census: {0}")]
    UnderResolved(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KacRiceError {
    #[error("covariance of F is singular (smallest eigenvalue {0:e})")]
    SingularCovariance(f64),
    #[error("two-point covariance singular at x = {x:?}, y = {y:?}")]
    SingularPair { x: Vec<f64>, y: Vec<f64> },
    #[error("operation requires a stationary model, got {0}")]
    Nonstationary(&'static str),
    #[error("operation not defined for {0}")]
    Unsupported(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
