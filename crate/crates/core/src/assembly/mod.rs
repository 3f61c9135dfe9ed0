//! P1 finite-element operators: stiffness, log-weighted stiffness, Hardy
//! mass, plain mass, Robin boundary mass and the weighted-average constraint.

mod forms;
mod operator;
mod rule;

pub use forms::{
    boundary_mass, constraint_vector, constraint_vector_with, hardy_mass, plain_mass, stiffness, weighted_mass_with,
    weighted_stiffness, weighted_stiffness_with, BetaSpec, ConstraintVector,
};
pub use operator::{OperatorKind, SymmetricOperator};
pub use rule::{WeightedRule, CORNER_DEGREE, CORNER_LEVELS, FAR_DEGREE};

use crate::quadrature::QuadratureError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("triangle {0} has non-positive area")]
    DegenerateTriangle(usize),
    #[error("boundary coefficient is not finite on boundary edge {0}")]
    NonFiniteBeta(usize),
    #[error("operator dimensions do not match")]
    DimensionMismatch,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}
