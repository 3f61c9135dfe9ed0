use super::{BoundaryTag, GeometryError, Point};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Symbolic description of the domain families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    /// The disk of the given radius centred at the origin.
    Disk { radius: f64 },
    /// The annular sector `(1−δ, 1) × (θ_lo, θ_hi)` joined to a disk around the
    /// origin by a straight corridor along the bisecting ray.
    SectorAnnulus { delta: f64, theta_lo: f64, theta_hi: f64 },
    /// Star-shaped domain with radial boundary
    /// `ρ(θ) = L + amplitude · max(0, cos(θ − bump_angle))² · (1 − L)`.
    LDomain {
        #[serde(rename = "L")]
        l: f64,
        bump_angle: f64,
        bump_amplitude: f64,
    },
    /// `B_r ∩ {x₂ > h(x₁)}` with `h(x) = Σ h_coeffs[k] x^k`.
    HalfGraph { h_coeffs: Vec<f64>, r: f64 },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::InvalidDomain(msg));
        match self {
            DomainSpec::Disk { radius } => {
                if !(*radius > 0.0 && *radius <= 1.0) {
                    return bad(format!("disk radius must lie in (0, 1], got {radius}"));
                }
            }
            DomainSpec::SectorAnnulus { delta, theta_lo, theta_hi } => {
                if !(*delta > 0.0 && *delta < 1.0) {
                    return bad(format!("delta must lie in (0, 1), got {delta}"));
                }
                if !(*theta_lo >= 0.0 && theta_lo < theta_hi && *theta_hi < TAU) {
                    return bad(format!("need 0 ≤ theta_lo < theta_hi < 2π, got [{theta_lo}, {theta_hi}]"));
                }
            }
            DomainSpec::LDomain { l, bump_angle, bump_amplitude } => {
                if !(*l > 0.0 && *l < 1.0) {
                    return bad(format!("L must lie in (0, 1), got {l}"));
                }
                if !bump_angle.is_finite() {
                    return bad("bump_angle must be finite".into());
                }
                if !(*bump_amplitude >= 0.0 && *bump_amplitude <= 1.0) {
                    return bad(format!("bump_amplitude must lie in [0, 1] so that Ω ⊂ B_1, got {bump_amplitude}"));
                }
            }
            DomainSpec::HalfGraph { h_coeffs, r } => {
                if !(*r > 0.0 && *r <= 1.0) {
                    return bad(format!("r must lie in (0, 1], got {r}"));
                }
                if h_coeffs.iter().take(2).any(|c| *c != 0.0) {
                    return bad("h must satisfy h(0) = h'(0) = 0".into());
                }
                if h_coeffs.iter().any(|c| !c.is_finite()) {
                    return bad("h coefficients must be finite".into());
                }
                let max_h = (0..=200)
                    .map(|i| -r + 2.0 * r * i as f64 / 200.0)
                    .map(|x| self.graph(x).abs())
                    .fold(0.0, f64::max);
                if max_h >= 0.5 * r {
                    return bad(format!("graph leaves the admissible band: max |h| = {max_h} on (−r, r)"));
                }
            }
        }
        Ok(())
    }

    /// Smallest distance from the origin to the boundary (for star-shaped variants).
    pub fn inner_radius(&self) -> f64 {
        match self {
            DomainSpec::Disk { radius } => *radius,
            DomainSpec::LDomain { l, .. } => *l,
            DomainSpec::SectorAnnulus { .. } => self.origin_disk_radius(),
            DomainSpec::HalfGraph { r, .. } => *r,
        }
    }

    /// Largest distance from the origin to a point of the domain.
    pub fn outer_radius(&self) -> f64 {
        match self {
            DomainSpec::Disk { radius } => *radius,
            DomainSpec::LDomain { l, bump_amplitude, .. } => l + bump_amplitude * (1.0 - l),
            DomainSpec::SectorAnnulus { .. } => 1.0,
            DomainSpec::HalfGraph { r, .. } => *r,
        }
    }

    /// Radial boundary function of the star-shaped variants.
    pub fn radial_boundary(&self, theta: f64) -> Option<f64> {
        match self {
            DomainSpec::Disk { radius } => Some(*radius),
            DomainSpec::LDomain { l, bump_angle, bump_amplitude } => {
                let c = (theta - bump_angle).cos().max(0.0);
                Some(l + bump_amplitude * c * c * (1.0 - l))
            }
            _ => None,
        }
    }

    /// Radius of the disk around the origin in the sector-annulus realization.
    pub fn origin_disk_radius(&self) -> f64 {
        match self {
            DomainSpec::SectorAnnulus { delta, .. } => (0.5 * (1.0 - delta)).min(0.25),
            _ => self.inner_radius(),
        }
    }

    /// The graph function `h` of the half-domain variant (zero otherwise).
    pub fn graph(&self, x: f64) -> f64 {
        match self {
            DomainSpec::HalfGraph { h_coeffs, .. } => h_coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            _ => 0.0,
        }
    }

    /// Whether the origin lies on the boundary.
    pub fn origin_on_boundary(&self) -> bool {
        matches!(self, DomainSpec::HalfGraph { .. })
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.outer_radius()
    }

    /// Projects the midpoint of the boundary edge `(p, q)` onto the analytic boundary.
    pub fn project_boundary_midpoint(&self, p: Point, q: Point, tag: BoundaryTag) -> Point {
        let m = p.midpoint(q);
        match self {
            DomainSpec::Disk { radius } => (radius / m.norm()) * m,
            DomainSpec::LDomain { .. } => {
                let theta = m.angle();
                Point::polar(self.radial_boundary(theta).expect("star-shaped"), theta)
            }
            DomainSpec::SectorAnnulus { delta, .. } => {
                for c in [1.0, 1.0 - delta, self.origin_disk_radius()] {
                    let tol = 1e-9 * c;
                    if (p.norm() - c).abs() < tol && (q.norm() - c).abs() < tol {
                        return (c / m.norm()) * m;
                    }
                }
                m
            }
            DomainSpec::HalfGraph { r, .. } => match tag {
                BoundaryTag::Graph => Point::new(m.x(), self.graph(m.x())),
                _ => (r / m.norm()) * m,
            },
        }
    }

    /// Distance of a boundary vertex from the curved boundary piece it belongs to.
    ///
    /// Returns `None` for vertices on straight pieces of the sector-annulus
    /// boundary, whose position is not determined by the domain alone.
    pub fn boundary_defect(&self, p: Point, tag: BoundaryTag) -> Option<f64> {
        match self {
            DomainSpec::Disk { radius } => Some((p.norm() - radius).abs()),
            DomainSpec::LDomain { .. } => {
                Some((p.norm() - self.radial_boundary(p.angle()).expect("star-shaped")).abs())
            }
            DomainSpec::SectorAnnulus { delta, theta_lo, theta_hi } => {
                let circles = [1.0, 1.0 - delta, self.origin_disk_radius()]
                    .into_iter()
                    .map(|c| (p.norm() - c).abs())
                    .fold(f64::INFINITY, f64::min);
                let rays = [*theta_lo, *theta_hi]
                    .into_iter()
                    .map(|t| Point::polar(1.0, t).cross(p).abs())
                    .fold(f64::INFINITY, f64::min);
                let d = circles.min(rays);
                (d < 1e-9).then_some(d)
            }
            DomainSpec::HalfGraph { r, .. } => match tag {
                BoundaryTag::Graph => Some((p.y() - self.graph(p.x())).abs()),
                _ => Some((p.norm() - r).abs()),
            },
        }
    }

    /// Exact area for the variants where it has a closed form.
    pub fn exact_area(&self) -> Option<f64> {
        match self {
            DomainSpec::Disk { radius } => Some(PI * radius * radius),
            _ => None,
        }
    }
}
