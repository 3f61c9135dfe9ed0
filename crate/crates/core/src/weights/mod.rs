//! Weight functions, their radial integrals, admissibility of `(a, L)` and
//! the Muckenhoupt and Adams scans.

mod ball;
mod params;
mod radial;
mod scan;

pub use ball::ball_integral;
pub use params::{critical_exponent, WeightParams};
pub use radial::{
    admissible_check, admissible_grid, hardy_mass_integral, hardy_weight, radial_log_integral, shifted_log_moment,
    Admissibility, ExtendedLogWeight, HardyWeight, LogPowerWeight, RadialLogIntegral, SingularLogWeight, TailIntegral,
};
pub use scan::{adams_quantities, muckenhoupt_s, scan_sup, AdamsQuantities, GridSpec, ScanQuantity, ScanReport};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("the weight is singular at the origin")]
    SingularPoint,
    #[error("scan grid is empty")]
    EmptyGrid,
}
