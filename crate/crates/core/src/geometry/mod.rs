//! Domain families and graded triangulations with the origin as a vertex.

mod build;
mod domain;
mod mesh;
mod moments;
mod point;
mod refine;

pub use build::build_mesh;
pub use domain::DomainSpec;
pub use mesh::{BoundaryEdge, BoundaryTag, Grading, Mesh, MESH_FORMAT_VERSION};
pub use moments::{weighted_first_moments, WeightedMoments};
pub use point::{signed_area2, Point};
pub use refine::refine;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("triangle {0} is degenerate or negatively oriented")]
    DegenerateTriangle(usize),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("mesh format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}
