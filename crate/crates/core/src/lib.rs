//! Finite-element laboratory for the Laplacian with the critical logarithmic
//! Hardy weight `1 / (|x|² log²(a/|x|))` in two dimensions.

pub mod analysis;
pub mod assembly;
pub mod eigensolve;
pub mod geometry;
pub mod quadrature;
pub mod rng;
pub mod weights;
