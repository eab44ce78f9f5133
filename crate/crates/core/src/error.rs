//! Error types.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("conformal factor is not periodic: {0}")]
    NonPeriodicMetric(String),
    #[error("non-finite samples in {0}")]
    NonFinite(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticError {
    #[error("singular operator: {0}")]
    Singular(String),
    #[error("linear solve did not converge (relative residual {residual:e})")]
    NonConvergence { residual: f64 },
    #[error("negative or non-finite alpha {0}")]
    InvalidAlpha(f64),
    #[error("field does not match the operator grid")]
    ShapeMismatch,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error("time step {dt} exceeds the CFL bound {bound}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("state became non-finite at t = {0}")]
    NonFinite(f64),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error("flow map inversion failed at node {node} (residual {residual:e})")]
    InversionFailed { node: usize, residual: f64 },
    #[error("flow map is not invertible: Jacobian determinant {det:e} at node {node}")]
    NotInvertible { node: usize, det: f64 },
    #[error("flow map leaves the channel at node {0}")]
    LeftDomain(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoissonError {
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("state dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("product observable nesting exceeds depth {0}")]
    TooDeep(usize),
}
