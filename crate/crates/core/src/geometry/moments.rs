use super::{GeometryError, Mesh, Point};
use crate::quadrature::{standard_rule, CornerIntegrator, QuadRule, RadialWeight};
use crate::weights::HardyWeight;
use serde::{Deserialize, Serialize};

/// `∫_Ω x_i / (|x|² log²(a/|x|)) dx` for `i = 1, 2` over the meshed domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedMoments {
    pub first: f64,
    pub second: f64,
    /// Difference between two quadrature levels.
    pub error_estimate: f64,
}

impl WeightedMoments {
    pub fn is_zero(&self, tol: f64) -> bool {
        self.first.hypot(self.second) <= tol
    }
}

/// Rotates a triangle so the given vertex comes first, keeping orientation.
pub(crate) fn origin_first(tri: [usize; 3], origin: usize) -> [usize; 3] {
    match tri.iter().position(|&i| i == origin) {
        Some(1) => [tri[1], tri[2], tri[0]],
        Some(2) => [tri[2], tri[0], tri[1]],
        _ => tri,
    }
}

fn moments_with(mesh: &Mesh, weight: &HardyWeight, rule: &QuadRule, corner: &CornerIntegrator) -> [f64; 2] {
    let mut acc = [0.0; 2];
    for (t, &tri) in mesh.triangles.iter().enumerate() {
        if mesh.touches_origin(t) {
            let [_, i, j] = origin_first(tri, mesh.origin_vertex);
            let mut out = [0.0; 2];
            corner.integrate_into(weight, mesh.vertices[i], mesh.vertices[j], &mut out, |_, x, o| {
                o[0] = x.x();
                o[1] = x.y();
            });
            acc[0] += out[0];
            acc[1] += out[1];
        } else {
            let [p0, p1, p2] = tri.map(|i| mesh.vertices[i]);
            let area = mesh.triangle_area(t);
            for (mu, w) in rule.points.iter().zip(&rule.weights) {
                let x: Point = mu[0] * p0 + mu[1] * p1 + mu[2] * p2;
                let wx = area * w * weight.value(x.norm());
                acc[0] += wx * x.x();
                acc[1] += wx * x.y();
            }
        }
    }
    acc
}

pub fn weighted_first_moments(mesh: &Mesh, a: f64) -> Result<WeightedMoments, GeometryError> {
    if !(a > 1.0 && a.is_finite()) {
        return Err(GeometryError::InvalidParameter(format!("a must be > 1, got {a}")));
    }
    let weight = HardyWeight::new(a);
    let coarse = moments_with(mesh, &weight, &standard_rule(4).expect("degree 4"), &CornerIntegrator::new(16, 6).expect("levels"));
    let fine = moments_with(mesh, &weight, &standard_rule(8).expect("degree 8"), &CornerIntegrator::new(24, 8).expect("levels"));
    let error_estimate = (fine[0] - coarse[0]).abs().max((fine[1] - coarse[1]).abs());
    Ok(WeightedMoments { first: fine[0], second: fine[1], error_estimate })
}
