use super::params::check_scale;
use super::WeightError;
use crate::geometry::Point;
use crate::quadrature::{integrate_log, RadialWeight, Tolerance};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `1 / (|x|² log²(a/|x|))`.
pub fn hardy_weight(x: Point, a: f64) -> Result<f64, WeightError> {
    check_scale(a)?;
    let r = x.norm();
    if r == 0.0 {
        return Err(WeightError::SingularPoint);
    }
    if r >= a {
        return Err(WeightError::InvalidParameter(format!("|x| = {r} must be < a = {a}")));
    }
    Ok(HardyWeight::new(a).value(r))
}

/// A value together with the absolute quadrature error estimate and the bound
/// on the discarded tail of an infinite range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailIntegral {
    pub value: f64,
    pub error: f64,
    pub tail_bound: f64,
}

/// `∫_T^∞ t^α e^{−2(t−T)} dt` for `T > 0`, that is `e^{2T} ∫_T^∞ t^α e^{−2t} dt`.
///
/// The factor `e^{2T}` keeps the result of order `T^α` so callers can multiply
/// by `R² = a² e^{−2T}` without overflow.
pub fn shifted_log_moment(alpha: f64, lower: f64) -> TailIntegral {
    debug_assert!(lower > 0.0);
    let upper = lower + 40.0 + alpha.abs();
    let body = integrate_log(
        |t| t.powf(alpha) * (-2.0 * (t - lower)).exp(),
        lower,
        upper,
        Tolerance::relative(1e-14).with_abs(1e-300),
    );
    // For t ≥ U: t^α ≤ U^α e^{α⁺(t−U)/U}, hence the tail is at most U^α e^{−2(U−T)} / (2 − α⁺/U).
    let tail_bound = upper.powf(alpha) * (-2.0 * (upper - lower)).exp() / (2.0 - alpha.max(0.0) / upper);
    TailIntegral { value: body.value, error: body.error, tail_bound }
}

/// `(log(a/|x|))^α`, the power of the logarithm alone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPowerWeight {
    pub scale: f64,
    pub exponent: f64,
}

impl RadialWeight for LogPowerWeight {
    fn value(&self, r: f64) -> f64 {
        if self.exponent == 0.0 {
            1.0
        } else {
            (self.scale / r).ln().powf(self.exponent)
        }
    }

    fn disk_mass(&self, rho: f64) -> f64 {
        if self.exponent == 0.0 {
            0.5 * rho * rho
        } else {
            rho * rho * shifted_log_moment(self.exponent, (self.scale / rho).ln()).value
        }
    }
}

/// `1 / (|x|² log^A(a/|x|))` inside the unit ball and zero outside.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularLogWeight {
    pub scale: f64,
    pub exponent: f64,
}

impl RadialWeight for SingularLogWeight {
    fn value(&self, r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            1.0 / (r * r * (self.scale / r).ln().powf(self.exponent))
        }
    }

    fn disk_mass(&self, rho: f64) -> f64 {
        if self.exponent <= 1.0 {
            return f64::INFINITY;
        }
        (self.scale / rho.min(1.0)).ln().powf(1.0 - self.exponent) / (self.exponent - 1.0)
    }
}

/// The critical Hardy weight `1 / (|x|² log²(a/|x|))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardyWeight {
    pub scale: f64,
}

impl HardyWeight {
    pub fn new(scale: f64) -> Self {
        Self { scale }
    }
}

impl RadialWeight for HardyWeight {
    fn value(&self, r: f64) -> f64 {
        let l = (self.scale / r).ln();
        1.0 / (r * r * l * l)
    }

    fn disk_mass(&self, rho: f64) -> f64 {
        1.0 / (self.scale / rho).ln()
    }
}

/// `log^e(a/|x|)` inside the unit ball and `|x|^f log^e(a)` outside; with
/// `(e, f) = (B, γ)` this is the gradient weight extended to the plane and
/// with `(−B, −γ)` its reciprocal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendedLogWeight {
    pub scale: f64,
    pub log_exponent: f64,
    pub far_exponent: f64,
}

impl RadialWeight for ExtendedLogWeight {
    fn value(&self, r: f64) -> f64 {
        if r < 1.0 {
            (self.scale / r).ln().powf(self.log_exponent)
        } else {
            r.powf(self.far_exponent) * self.scale.ln().powf(self.log_exponent)
        }
    }

    fn disk_mass(&self, rho: f64) -> f64 {
        let inner = LogPowerWeight { scale: self.scale, exponent: self.log_exponent };
        if rho <= 1.0 {
            return inner.disk_mass(rho);
        }
        let k = 2.0 + self.far_exponent;
        inner.disk_mass(1.0) + self.scale.ln().powf(self.log_exponent) * (rho.powf(k) - 1.0) / k
    }
}

fn check_radius(radius: f64, a: f64) -> Result<(), WeightError> {
    check_scale(a)?;
    if radius > 0.0 && radius < a {
        Ok(())
    } else {
        Err(WeightError::InvalidParameter(format!("need 0 < R < a, got R = {radius}, a = {a}")))
    }
}

/// `∫_{B_R} log^α(a/|y|) dy` with the bound `C R² log^α(a/R)` where it applies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialLogIntegral {
    pub value: f64,
    pub error: f64,
    pub tail_bound: f64,
    /// The bound with `C = π` for `α ≤ 0` and `C = 2π/(1−α)` for `0 < α < 1`,
    /// available for `−1 < α < 1` and `a/R > e`.
    pub lemma_bound: Option<f64>,
}

pub fn radial_log_integral(radius: f64, a: f64, alpha: f64) -> Result<RadialLogIntegral, WeightError> {
    check_radius(radius, a)?;
    let lower = (a / radius).ln();
    let moment = shifted_log_moment(alpha, lower);
    let scale = 2.0 * PI * radius * radius;
    let lemma_bound = (alpha > -1.0 && alpha < 1.0 && lower > 1.0).then(|| {
        let c = if alpha <= 0.0 { PI } else { 2.0 * PI / (1.0 - alpha) };
        c * radius * radius * lower.powf(alpha)
    });
    Ok(RadialLogIntegral {
        value: scale * moment.value,
        error: scale * moment.error,
        tail_bound: scale * moment.tail_bound,
        lemma_bound,
    })
}

/// `∫_{B_R} dx / (|x|² log²(a/|x|)) = 2π / log(a/R)`.
pub fn hardy_mass_integral(radius: f64, a: f64) -> Result<f64, WeightError> {
    check_radius(radius, a)?;
    Ok(2.0 * PI * HardyWeight::new(a).disk_mass(radius))
}

/// Result of the admissibility test for a pair `(a, L)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub a: f64,
    #[serde(rename = "L")]
    pub inner_radius: f64,
    /// `∫_{B_L} log⁻²(a/|x|) dx`.
    pub integral: f64,
    /// Whether the integral exceeds `8π`.
    pub admissible: bool,
}

pub fn admissible_check(a: f64, inner_radius: f64) -> Result<Admissibility, WeightError> {
    check_scale(a)?;
    if !(inner_radius > 0.0 && inner_radius < 1.0) {
        return Err(WeightError::InvalidParameter(format!("L must lie in (0, 1), got {inner_radius}")));
    }
    let integral = radial_log_integral(inner_radius, a, -2.0)?.value;
    Ok(Admissibility { a, inner_radius, integral, admissible: integral > 8.0 * PI })
}

/// Evaluates every pair of the tensor grid, `a` varying slowest.
pub fn admissible_grid(a_values: &[f64], inner_radii: &[f64]) -> Result<Vec<Admissibility>, WeightError> {
    if a_values.is_empty() || inner_radii.is_empty() {
        return Err(WeightError::EmptyGrid);
    }
    a_values
        .iter()
        .flat_map(|&a| inner_radii.iter().map(move |&l| admissible_check(a, l)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use std::f64::consts::E;

    #[test]
    fn hardy_weight_values() {
        assert!((hardy_weight(Point::new(1.0, 0.0), E).unwrap() - 1.0).abs() < 1e-15);
        let expected = 1.0 / (0.25 * (1.0 + 2f64.ln()).powi(2));
        assert!((hardy_weight(Point::new(0.5, 0.0), E).unwrap() - expected).abs() < 1e-14);
        let (x, y) = (Point::new(0.3, 0.4), Point::new(0.0, -0.5));
        assert_eq!(hardy_weight(x, 2.0).unwrap(), hardy_weight(y, 2.0).unwrap());
        assert_eq!(hardy_weight(Point::ORIGIN, 2.0), Err(WeightError::SingularPoint));
    }

    #[test]
    fn moment_matches_closed_forms() {
        // α = 0: 1/2; α = 1: T/2 + 1/4.
        for t in [1e-6, 0.1, 1.0, 7.0] {
            assert!((shifted_log_moment(0.0, t).value - 0.5).abs() < 1e-14);
            assert!((shifted_log_moment(1.0, t).value - (0.5 * t + 0.25)).abs() < 1e-13 * (1.0 + t));
        }
    }

    #[test]
    fn disk_masses_match_direct_quadrature() {
        let tol = Tolerance::relative(1e-13);
        let check = |w: &dyn RadialWeight, rho: f64| {
            let direct = integrate_log(|s| w.value(s) * s, 1e-300, rho, tol).value;
            let closed = w.disk_mass(rho);
            assert!((direct - closed).abs() < 1e-10 * closed.abs(), "{direct} vs {closed}");
        };
        check(&LogPowerWeight { scale: 1.3, exponent: 0.5 }, 0.9);
        check(&LogPowerWeight { scale: 1.3, exponent: -0.5 }, 0.9);
        check(&ExtendedLogWeight { scale: 2.0, log_exponent: 0.5, far_exponent: 1.0 }, 0.7);
        // The singular weights have a logarithmic tail at the origin, so compare
        // the difference of masses over an annulus instead.
        let w = SingularLogWeight { scale: 1.5, exponent: 2.5 };
        let ring = integrate_log(|s| w.value(s) * s, 1e-3, 0.8, tol).value;
        assert!((ring - (w.disk_mass(0.8) - w.disk_mass(1e-3))).abs() < 1e-12);
        let far = ExtendedLogWeight { scale: 2.0, log_exponent: -0.5, far_exponent: -1.0 };
        let outer = integrate(|s| far.value(s) * s, 1.0, 3.0, tol).value;
        assert!((outer - (far.disk_mass(3.0) - far.disk_mass(1.0))).abs() < 1e-12);
    }

    #[test]
    fn radial_log_integral_alpha_zero_is_area() {
        for (r, a) in [(0.5, 1.2), (1.0, E), (0.01, 30.0)] {
            let v = radial_log_integral(r, a, 0.0).unwrap().value;
            assert!((v - PI * r * r).abs() < 1e-13 * v);
        }
    }

    #[test]
    fn lemma_bound_holds() {
        for alpha in [-0.9, -0.5, 0.0, 0.3, 0.9] {
            for (r, a) in [(0.3, 1.2), (1.0, 3.0), (0.01, 2.0)] {
                let res = radial_log_integral(r, a, alpha).unwrap();
                let bound = res.lemma_bound.expect("a/R > e");
                assert!(res.value <= bound * (1.0 + 1e-12), "α={alpha} R={r} a={a}");
            }
        }
        assert!(radial_log_integral(0.9, 1.2, 0.5).unwrap().lemma_bound.is_none());
    }

    #[test]
    fn hardy_mass_closed_form() {
        assert!((hardy_mass_integral(1.0, E).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((hardy_mass_integral(1.0, E * E).unwrap() - PI).abs() < 1e-14);
        assert!(hardy_mass_integral(1.0, 1.0).is_err());
    }

    #[test]
    fn large_a_is_not_admissible() {
        let res = admissible_check(10f64.exp(), 0.9).unwrap();
        assert!(res.integral <= PI * 0.81 / 100.0);
        assert!(!res.admissible);
    }
}
