use super::EigenError;
use serde::{Deserialize, Serialize};

/// Boundary condition at `r = R` for the radial problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialBoundary {
    Neumann,
    /// `f'(R) + β f(R) = 0`.
    Robin { beta: f64 },
}

/// Reference eigenvalue of one angular mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialOracle {
    /// Richardson extrapolation of the two grids below.
    pub value: f64,
    pub coarse: f64,
    pub fine: f64,
    pub n_grid: usize,
}

/// Decay length of mode `m` in `s = log r` is `1/m`; the grid spans this many
/// decay lengths, which puts the truncation error far below rounding.
const DECAY_LENGTHS: f64 = 36.0;

/// Smallest eigenvalue of
/// `−f'' − f'/r + m² f/r² = λ f / (r² log²(a/r))` on `(0, R)` with `f(0) = 0`.
///
/// In `s = log r` the problem becomes `−f_ss + m² f = λ f / (log a − s)²`,
/// discretized by central differences on a uniform grid in `s` (a geometric
/// grid in `r`) and solved by Sturm bisection on the symmetric tridiagonal
/// pencil. Grids of `n_grid` and `2 n_grid` points are combined by Richardson
/// extrapolation.
pub fn radial_oracle_eigen(
    a: f64,
    mode: u32,
    radius: f64,
    n_grid: usize,
    boundary: RadialBoundary,
) -> Result<RadialOracle, EigenError> {
    if !(radius > 0.0 && a > radius && a.is_finite()) {
        return Err(EigenError::InvalidParameter(format!("need 0 < R < a, got R = {radius}, a = {a}")));
    }
    if mode == 0 {
        return Err(EigenError::InvalidParameter("angular mode must be at least 1".into()));
    }
    if n_grid < 200 {
        return Err(EigenError::InvalidParameter(format!("n_grid must be at least 200, got {n_grid}")));
    }
    if let RadialBoundary::Robin { beta } = boundary {
        if !beta.is_finite() {
            return Err(EigenError::InvalidParameter("Robin coefficient must be finite".into()));
        }
    }
    let coarse = radial_fd_eigen(a, mode, radius, n_grid, boundary);
    let fine = radial_fd_eigen(a, mode, radius, 2 * n_grid, boundary);
    Ok(RadialOracle { value: (4.0 * fine - coarse) / 3.0, coarse, fine, n_grid })
}

fn radial_fd_eigen(a: f64, mode: u32, radius: f64, n: usize, boundary: RadialBoundary) -> f64 {
    let m2 = f64::from(mode * mode);
    let span = DECAY_LENGTHS / f64::from(mode);
    let h = span / n as f64;
    let log_a = a.ln();
    let s_max = radius.ln();
    // Unknowns at s_i = s_max − span + i h for i = 1..=n; f = 0 at i = 0.
    let mut diag = vec![2.0 / (h * h) + m2; n];
    let mut weight: Vec<f64> = (1..=n)
        .map(|i| {
            let t = log_a - (s_max - span + i as f64 * h);
            1.0 / (t * t)
        })
        .collect();
    // Last row from the ghost-point boundary condition, halved to keep symmetry.
    let robin = match boundary {
        RadialBoundary::Neumann => 0.0,
        RadialBoundary::Robin { beta } => beta * radius / h,
    };
    diag[n - 1] = 1.0 / (h * h) + 0.5 * m2 + robin;
    weight[n - 1] *= 0.5;
    let off = -1.0 / (h * h);
    // Symmetric tridiagonal D^{-1/2} A D^{-1/2}.
    let scale: Vec<f64> = weight.iter().map(|w| 1.0 / w.sqrt()).collect();
    let c: Vec<f64> = diag.iter().zip(&scale).map(|(d, s)| d * s * s).collect();
    let e: Vec<f64> = (0..n - 1).map(|i| off * scale[i] * scale[i + 1]).collect();
    smallest_tridiagonal_eigenvalue(&c, &e)
}

/// Number of eigenvalues of the tridiagonal matrix below `x`.
fn sturm_count(c: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..c.len() {
        let coupling = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] / d };
        d = c[i] - x - coupling;
        if d == 0.0 {
            d = -f64::EPSILON * (c[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn smallest_tridiagonal_eigenvalue(c: &[f64], e: &[f64]) -> f64 {
    let n = c.len();
    let radius = |i: usize| {
        let left = if i > 0 { e[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { e[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = (0..n).map(|i| c[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..n).map(|i| c[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(c, e, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
