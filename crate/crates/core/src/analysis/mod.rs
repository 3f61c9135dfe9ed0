//! Explicit upper bounds for the second eigenvalue, the near-origin exponent
//! of eigenfunctions, weighted Sobolev constants and one-dimensional radial
//! checks of the inequalities behind them.

mod asymptotics;
mod bounds;
mod radial;
mod sobolev;

pub use asymptotics::{asymptotic_exponent_fit, theoretical_exponent, FitResult, FitWindow, RaySample};
pub use bounds::{test_function_bound_a, test_function_bound_l, LDomainBound, SectorBound};
pub use radial::{
    radial_hardy_estimate, radial_lemma_check, scaling_family_quotient, RadialHardyEstimate, RadialLemmaReport,
};
pub use sobolev::{
    half_domain_inequality_check, sobolev_constant_estimate, DescentOptions, HalfDomainReport, MeshResolution,
    SobolevEstimate,
};

use crate::assembly::AssemblyError;
use crate::eigensolve::EigenError;
use crate::geometry::GeometryError;
use crate::weights::WeightError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("condition violated: {0}")]
    ConditionViolated(String),
    #[error("fit window [{0}, {1}] is not covered by the mesh")]
    WindowOutsideMesh(f64, f64),
    #[error("the eigenfunction vanishes on the fit window")]
    VanishingEigenfunction,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Weight(#[from] WeightError),
}
