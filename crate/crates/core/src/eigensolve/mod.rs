//! Generalized symmetric eigenproblems: the constrained second Neumann
//! eigenvalue, the first Robin eigenvalue, the largest eigenvalue of an
//! indefinite pencil, and a one-dimensional radial reference solver.

mod block;
mod radial;
mod shift;

pub use block::{pencil_max_eigen, robin_first_eigen, second_neumann_eigen, EigOptions};
pub use radial::{radial_oracle_eigen, RadialBoundary, RadialOracle};
pub(crate) use shift::ShiftedPencil;

use crate::assembly::SymmetricOperator;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("operator dimensions do not match")]
    DimensionMismatch,
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("the vector is zero")]
    ZeroVector,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// An eigenpair with its convergence record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigResult {
    pub lambda: f64,
    #[serde(skip)]
    pub coefficients: Vec<f64>,
    /// `‖Au − λMu‖ / (‖Au‖ + |λ| ‖Mu‖)`.
    pub residual_norm: f64,
    pub iterations: usize,
    /// `|wᵀu| / (‖w‖ ‖u‖)` for the constrained problem, zero otherwise.
    pub constraint_violation: f64,
    /// Smallest Ritz value per iteration.
    #[serde(skip)]
    pub history: Vec<f64>,
    pub converged: bool,
    /// Next Ritz value above `lambda` at termination, when available.
    pub next_lambda: Option<f64>,
    /// Set when the extreme eigenvalue could not be bracketed; `lambda` is then infinite.
    pub unbounded: bool,
}

/// `uᵀAu / uᵀMu`.
pub fn rayleigh_quotient(u: &[f64], numerator: &SymmetricOperator, mass: &SymmetricOperator) -> Result<f64, EigenError> {
    if u.len() != numerator.dim() || u.len() != mass.dim() {
        return Err(EigenError::DimensionMismatch);
    }
    let den = mass.quadratic_form(u);
    if den == 0.0 {
        return Err(EigenError::ZeroVector);
    }
    Ok(numerator.quadratic_form(u) / den)
}

/// `‖Ku − λ M_w u‖ / ‖Ku‖`.
pub fn euler_lagrange_residual(
    u: &[f64],
    lambda: f64,
    stiffness: &SymmetricOperator,
    mass: &SymmetricOperator,
) -> Result<f64, EigenError> {
    if u.len() != stiffness.dim() || u.len() != mass.dim() {
        return Err(EigenError::DimensionMismatch);
    }
    let ku = stiffness.apply(u);
    let mu = mass.apply(u);
    let norm = norm2(&ku);
    if norm == 0.0 {
        return Err(EigenError::ZeroVector);
    }
    let r: Vec<f64> = ku.iter().zip(&mu).map(|(a, b)| a - lambda * b).collect();
    Ok(norm2(&r) / norm)
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
