use super::AnalysisError;
use crate::assembly::{hardy_mass, stiffness, WeightedRule};
use crate::geometry::{DomainSpec, Mesh};
use crate::quadrature::{integrate, integrate_pieces, Tolerance};
use crate::weights::{radial_log_integral, HardyWeight};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Rayleigh quotient of the sector test function and its pieces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorBound {
    pub a: f64,
    /// Upper bound for the second eigenvalue.
    pub bound: f64,
    /// `bound / log a`.
    pub normalized: f64,
    /// Radial part of the Dirichlet energy, `∫ ((rχ)')² r dr`.
    pub radial_energy: f64,
    /// Angular part of the Dirichlet energy, `(2π/Θ)² ∫ χ² r dr`.
    pub angular_energy: f64,
    /// `∫ χ² r / log²(a/r) dr`.
    pub weighted_mass: f64,
    /// `∫ sin(2π(θ − θ_lo)/Θ) dθ`, the factor that makes the weighted mean vanish.
    pub angular_mean: f64,
}

/// Cutoff that vanishes on `[0, 1 − δ]`, equals 1 on `[1 − δ/2, 1]` and is a
/// cubic smoothstep in between. Returns the value and the derivative.
fn cutoff(r: f64, delta: f64) -> (f64, f64) {
    let width = 0.5 * delta;
    let s = (r - (1.0 - delta)) / width;
    if s <= 0.0 {
        (0.0, 0.0)
    } else if s >= 1.0 {
        (1.0, 0.0)
    } else {
        (s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s) / width)
    }
}

/// Upper bound for the second eigenvalue on a domain containing the annular
/// sector `(1 − δ, 1) × (θ_lo, θ_hi)`.
///
/// The test function `r χ(r) sin(2π(θ − θ_lo)/Θ)` has zero weighted mean
/// because its angular factor integrates to zero, and every integral in its
/// Rayleigh quotient splits into a radial and an angular one. The common
/// angular factor `Θ/2` cancels.
pub fn test_function_bound_a(spec: &DomainSpec, a: f64) -> Result<SectorBound, AnalysisError> {
    let DomainSpec::SectorAnnulus { delta, theta_lo, theta_hi } = *spec else {
        return Err(AnalysisError::InvalidParameter("the sector bound needs a sector_annulus domain".into()));
    };
    spec.validate()?;
    if !(a > 1.0 && a.is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!("a must be > 1, got {a}")));
    }
    let span = theta_hi - theta_lo;
    let frequency = 2.0 * PI / span;
    let breaks = [1.0 - delta, 1.0 - 0.75 * delta, 1.0 - 0.5 * delta, 1.0];
    let tol = Tolerance::relative(1e-13).with_abs(1e-300);
    let radial_energy = integrate_pieces(
        |r| {
            let (chi, dchi) = cutoff(r, delta);
            let d = chi + r * dchi;
            d * d * r
        },
        &breaks,
        tol,
    )
    .value;
    let plain = integrate_pieces(|r| cutoff(r, delta).0.powi(2) * r, &breaks, tol).value;
    let weighted_mass = integrate_pieces(
        |r| {
            let l = (a / r).ln();
            cutoff(r, delta).0.powi(2) * r / (l * l)
        },
        &breaks,
        tol,
    )
    .value;
    let angular_mean = integrate(|t| (frequency * (t - theta_lo)).sin(), theta_lo, theta_hi, tol.with_abs(1e-15)).value;
    let angular_energy = frequency * frequency * plain;
    let bound = (radial_energy + angular_energy) / weighted_mass;
    Ok(SectorBound { a, bound, normalized: bound / a.ln(), radial_energy, angular_energy, weighted_mass, angular_mean })
}

/// The linear test function on a star-shaped domain and the bound it gives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LDomainBound {
    pub a: f64,
    pub inner_radius: f64,
    /// `∫ x_i / (|x|² log²(a/|x|)) dx` with the assembly quadrature.
    pub moments: [f64; 2],
    /// Area of the meshed domain.
    pub area: f64,
    /// `∫_{B_L} log^{−2}(a/|x|) dx`.
    pub inner_integral: f64,
    /// `2|Ω| / ∫_{B_L} log^{−2}(a/|x|) dx`.
    pub chain_value: f64,
    /// Rayleigh quotient of `u = α₂x₁ − α₁x₂` with the assembled operators.
    pub quotient: f64,
}

/// Bound for the second eigenvalue from the test function `u = α₂x₁ − α₁x₂`,
/// where `α` are the weighted first moments. `u` is linear, so it lies in the
/// finite-element space and its quotient also bounds the discrete eigenvalue.
pub fn test_function_bound_l(mesh: &Mesh, a: f64) -> Result<LDomainBound, AnalysisError> {
    let Some(DomainSpec::LDomain { l, .. }) = mesh.domain else {
        return Err(AnalysisError::InvalidParameter("the linear test function needs an l_domain mesh".into()));
    };
    if !(a > 1.0 && a.is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!("a must be > 1, got {a}")));
    }
    let rule = WeightedRule::new(mesh, &HardyWeight::new(a))?;
    let xs: Vec<f64> = mesh.vertices.iter().map(|p| p.x()).collect();
    let ys: Vec<f64> = mesh.vertices.iter().map(|p| p.y()).collect();
    let moments = [rule.integrate(&xs, |v| v), rule.integrate(&ys, |v| v)];
    let scale: f64 = rule.integrate(&vec![1.0; xs.len()], |v| v);
    if moments[0].hypot(moments[1]) <= 1e-12 * scale {
        return Err(AnalysisError::ConditionViolated(format!(
            "weighted first moments vanish: ({:e}, {:e})",
            moments[0], moments[1]
        )));
    }
    let u: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| moments[1] * x - moments[0] * y).collect();
    let k = stiffness(mesh)?;
    let m = hardy_mass(mesh, a)?;
    let quotient = k.quadratic_form(&u) / m.quadratic_form(&u);
    let area = mesh.area();
    let inner_integral = radial_log_integral(l, a, -2.0)?.value;
    Ok(LDomainBound {
        a,
        inner_radius: l,
        moments,
        area,
        inner_integral,
        chain_value: 2.0 * area / inner_integral,
        quotient,
    })
}
