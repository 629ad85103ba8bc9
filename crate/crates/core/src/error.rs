use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::field::ScalarField;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value {value} at cell {index:?}")]
    NonFinite { index: Vec<usize>, value: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    InvalidAxis { axis: usize, dim: usize },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("operation requires a {expected}-dimensional field, got {actual}")]
    UnsupportedDimension { expected: usize, actual: usize },

    #[error("multiplier fit is degenerate (cutoff derivative numerically constant, relative spread {spread:e})")]
    DegenerateMultipliers { spread: f64 },

    #[error(
        "constraint projection failed after {iterations} Newton steps \
         (mean error {mean_error:e}, volume error {volume_error:e}, jacobian condition {jacobian_condition:e})"
    )]
    Projection {
        iterations: usize,
        mean_error: f64,
        volume_error: f64,
        jacobian_condition: f64,
        last_iterate: Box<ScalarField>,
    },

    #[error("energy became non-finite at iteration {iteration}")]
    NonFiniteEnergy {
        iteration: usize,
        state: Box<ScalarField>,
    },

    #[error("level {level} is not regular: a bracketing slope is below the critical threshold")]
    NonRegularLevel { level: f64 },

    #[error("superlevel set at level {level} is {kind}")]
    DegenerateLevelSet { level: f64, kind: &'static str },

    #[error("adaptive quadrature did not converge (estimate {estimate}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },
}
