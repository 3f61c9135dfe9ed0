use super::adaptive::{integrate, Tolerance};
use super::{corner_geometric_rule, QuadRule, QuadratureError};
use crate::geometry::Point;

/// A radially symmetric weight `w(|x|)` that may be singular at the origin.
pub trait RadialWeight: Sync {
    /// `w(r)` for `r > 0`.
    fn value(&self, r: f64) -> f64;

    /// `∫_0^ρ w(s) s ds`, the mass of the weight per unit angle inside radius ρ.
    fn disk_mass(&self, rho: f64) -> f64;
}

/// `∫_T w dx` for the triangle `T = (0, p1, p2)`, reduced to an integral along
/// the edge opposite the origin: `∫_0^1 m(|x(s)|) (p1 × p2) / |x(s)|² ds`
/// where `m` is the disk mass and `x(s) = p1 + s (p2 − p1)`.
pub fn corner_angular_mass<W: RadialWeight + ?Sized>(weight: &W, p1: Point, p2: Point) -> f64 {
    let cross = p1.cross(p2);
    let edge = p2 - p1;
    integrate(
        |s| {
            let x = p1 + s * edge;
            let r2 = x.dot(x);
            weight.disk_mass(r2.sqrt()) * cross / r2
        },
        0.0,
        1.0,
        Tolerance::relative(1e-14).with_abs(1e-300),
    )
    .value
}

/// Integrates `f · w` over triangles with a vertex at the singular origin.
///
/// The value of `f` at the origin is split off and multiplied by the exact
/// weighted area of the triangle; the remainder `(f − f(0)) w` is integrable
/// like `1/r` and handled by the corner-geometric composite rule.
#[derive(Clone, Debug)]
pub struct CornerIntegrator {
    rule: QuadRule,
}

impl CornerIntegrator {
    /// Layers of the corner rule with `standard_rule(degree)` on every piece.
    pub fn new(levels: usize, degree: usize) -> Result<Self, QuadratureError> {
        Ok(Self { rule: corner_geometric_rule(levels, degree)? })
    }

    pub fn rule(&self) -> &QuadRule {
        &self.rule
    }

    /// Integrates `out.len()` functions at once over `(0, p1, p2)`.
    ///
    /// `f(mu, x, out)` receives barycentric coordinates `mu` (with `mu[0]`
    /// belonging to the origin) and the physical point `x`.
    pub fn integrate_into<W, F>(&self, weight: &W, p1: Point, p2: Point, out: &mut [f64], f: F)
    where
        W: RadialWeight + ?Sized,
        F: Fn([f64; 3], Point, &mut [f64]),
    {
        let n = out.len();
        let area = 0.5 * p1.cross(p2);
        let mass = corner_angular_mass(weight, p1, p2);
        let mut at_origin = vec![0.0; n];
        f([1.0, 0.0, 0.0], Point::ORIGIN, &mut at_origin);
        let mut acc = vec![0.0; n];
        let mut vals = vec![0.0; n];
        for (mu, w) in self.rule.points.iter().zip(&self.rule.weights) {
            let x = mu[1] * p1 + mu[2] * p2;
            let wx = weight.value(x.norm());
            f(*mu, x, &mut vals);
            for k in 0..n {
                acc[k] += w * (vals[k] - at_origin[k]) * wx;
            }
        }
        for k in 0..n {
            out[k] = at_origin[k] * mass + area * acc[k];
        }
    }

    /// Scalar version of [`integrate_into`](Self::integrate_into).
    pub fn integrate<W, F>(&self, weight: &W, p1: Point, p2: Point, f: F) -> f64
    where
        W: RadialWeight + ?Sized,
        F: Fn([f64; 3], Point) -> f64,
    {
        let mut out = [0.0];
        self.integrate_into(weight, p1, p2, &mut out, |mu, x, o| o[0] = f(mu, x));
        out[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    struct Hardy(f64);
    impl RadialWeight for Hardy {
        fn value(&self, r: f64) -> f64 {
            1.0 / (r * r * (self.0 / r).ln().powi(2))
        }
        fn disk_mass(&self, rho: f64) -> f64 {
            1.0 / (self.0 / rho).ln()
        }
    }

    /// Independent oracle: nested polar quadrature about the origin,
    /// ∫_φ ∫_0^{ρ(φ)} f(r e_φ) w(r) r dr dφ with the radial part in log r.
    fn polar_oracle(a: f64, p1: Point, p2: Point, f: impl Fn(Point) -> f64) -> f64 {
        let (phi1, phi2) = (p1.angle(), p1.angle() + p1.cross(p2).atan2(p1.dot(p2)));
        let edge = p2 - p1;
        let normal = Point::new(edge.y(), -edge.x());
        let d = normal.dot(p1) / normal.norm();
        let nhat = (1.0 / normal.norm()) * normal;
        let tol = Tolerance::relative(1e-12);
        integrate(
            |phi| {
                let e = Point::polar(1.0, phi);
                let rho = d / nhat.dot(e);
                // s = log(a/r): r dr w(r) = dr / (r log²) = ds / s²
                let s0 = (a / rho).ln();
                super::super::integrate_pieces(
                    |v: f64| {
                        // s = s0 / v, v ∈ (0, 1]: ds / s² = dv / s0
                        if v <= 0.0 {
                            return 0.0;
                        }
                        let s = s0 / v;
                        let r = a * (-s).exp();
                        f(r * e) / s0
                    },
                    &[0.0, 0.25, 0.5, 1.0],
                    tol,
                )
                .value
            },
            phi1,
            phi2,
            tol,
        )
        .value
    }

    #[test]
    fn corner_mass_matches_polar_oracle() {
        for a in [1.01, 1.2, E, E * E] {
            let (p1, p2) = (Point::new(0.3, -0.05), Point::new(0.1, 0.25));
            let exact = polar_oracle(a, p1, p2, |_| 1.0);
            let got = corner_angular_mass(&Hardy(a), p1, p2);
            assert!((got - exact).abs() < 1e-10 * exact, "a={a}: {got} vs {exact}");
        }
    }

    #[test]
    fn subtraction_integrator_reaches_tight_tolerance() {
        let integ = CornerIntegrator::new(24, 8).unwrap();
        for a in [1.01, 1.2, E, E * E] {
            let (p1, p2) = (Point::new(0.4, 0.0), Point::new(0.2, 0.3));
            let f = |x: Point| 1.0 + 2.0 * x.x() - x.y() + 3.0 * x.x() * x.y();
            let exact = polar_oracle(a, p1, p2, f);
            let got = integ.integrate(&Hardy(a), p1, p2, |_, x| f(x));
            assert!((got - exact).abs() < 1e-6 * exact.abs(), "a={a}: {got} vs {exact}");
        }
    }
}
