//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An element deformation gradient has non-positive determinant; the
    /// current iterate inverts an element and must be rejected upstream.
    #[error("non-positive jacobian ({context}): J = {j}")]
    NonPositiveJacobian { context: &'static str, j: f64 },

    #[error("degenerate tube specification: {0}")]
    DegenerateSpec(String),

    #[error("nodal field `{name}` has length {got}, mesh has {want} nodes")]
    FieldLengthMismatch {
        name: String,
        got: usize,
        want: usize,
    },

    #[error("matrix is singular (pivot {pivot:e} at row {row})")]
    SingularMatrix { row: usize, pivot: f64 },

    #[error("krylov breakdown: {0}")]
    Breakdown(String),

    #[error("krylov stagnation after {iterations} iterations (rel. residual {residual:e})")]
    Stagnation { iterations: usize, residual: f64 },

    #[error("newton did not converge within {max_iter} iterations (last err {err:e})")]
    MaxIterExceeded { max_iter: usize, err: f64 },

    #[error("linear solver failed in newton iteration {iter}: {reason}")]
    LinearSolverFailure { iter: usize, reason: String },

    #[error("coarse-level system singular during hierarchy construction (level {level})")]
    CoarseSingular { level: usize },

    #[error("sample point ({x}, {y}, {z}) lies outside the fluid domain")]
    SampleOutsideDomain { x: f64, y: f64, z: f64 },

    #[error("config error ({location}): {message}")]
    Config { location: String, message: String },

    #[error("mesh format error: {0}")]
    MeshFormat(String),

    #[error("matrix market format error: {0}")]
    MatrixMarket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            location: location.into(),
            message: message.into(),
        }
    }
}
