use super::AssemblyError;
use crate::geometry::{Mesh, Point};
use crate::quadrature::{standard_rule, CornerIntegrator, RadialWeight};
use rayon::prelude::*;

/// Levels and per-piece degree of the corner rule on origin triangles.
pub const CORNER_LEVELS: usize = 24;
pub const CORNER_DEGREE: usize = 10;
/// Degree of the rule on triangles away from the origin.
pub const FAR_DEGREE: usize = 6;

/// A point rule for `∫_Ω F(x, u(x)) w(|x|) dx` over a mesh, with the weight
/// folded into the point weights.
///
/// On triangles touching the origin the singular part is handled by
/// subtraction: `∫ F w = F(0) m_T + |T| Σ c_q (F(x_q) − F(0)) w(x_q)` with the
/// exact weighted area `m_T`. Rearranged, that is an ordinary point rule with
/// one extra point at the origin vertex, so nonlinear integrands can be
/// evaluated with the same weights as the mass matrix.
#[derive(Clone, Debug)]
pub struct WeightedRule {
    /// Points of triangle `t` are `offsets[t]..offsets[t + 1]`.
    offsets: Vec<usize>,
    /// Barycentric coordinates in the vertex order of `mesh.triangles[t]`.
    bary: Vec<[f64; 3]>,
    weights: Vec<f64>,
    /// Vertex indices of the owning triangle, one entry per point.
    owners: Vec<[usize; 3]>,
}

impl WeightedRule {
    pub fn new<W: RadialWeight>(mesh: &Mesh, weight: &W) -> Result<Self, AssemblyError> {
        Self::with_rules(mesh, weight, FAR_DEGREE, CORNER_LEVELS, CORNER_DEGREE)
    }

    pub fn with_rules<W: RadialWeight>(
        mesh: &Mesh,
        weight: &W,
        far_degree: usize,
        corner_levels: usize,
        corner_degree: usize,
    ) -> Result<Self, AssemblyError> {
        let far = standard_rule(far_degree)?;
        let corner = CornerIntegrator::new(corner_levels, corner_degree)?;
        let per_triangle: Vec<Result<Vec<([f64; 3], f64)>, AssemblyError>> = (0..mesh.num_triangles())
            .into_par_iter()
            .map(|t| {
                let area = mesh.triangle_area(t);
                if !(area > 0.0) {
                    return Err(AssemblyError::DegenerateTriangle(t));
                }
                let tri = mesh.triangles[t];
                let [p0, p1, p2] = mesh.triangle_points(t);
                let Some(slot) = tri.iter().position(|&i| i == mesh.origin_vertex) else {
                    return Ok(far
                        .points
                        .iter()
                        .zip(&far.weights)
                        .map(|(mu, c)| {
                            let x: Point = mu[0] * p0 + mu[1] * p1 + mu[2] * p2;
                            (*mu, area * c * weight.value(x.norm()))
                        })
                        .collect());
                };
                // Rotate so the origin comes first, integrate, and map the
                // barycentric coordinates back to the stored vertex order.
                let (s1, s2) = ((slot + 1) % 3, (slot + 2) % 3);
                let (q1, q2) = (mesh.vertices[tri[s1]], mesh.vertices[tri[s2]]);
                let unrotate = |mu: [f64; 3]| {
                    let mut out = [0.0; 3];
                    out[slot] = mu[0];
                    out[s1] = mu[1];
                    out[s2] = mu[2];
                    out
                };
                let rule = corner.rule();
                let mut points = Vec::with_capacity(rule.len() + 1);
                let mut discrete_mass = 0.0;
                for (mu, c) in rule.points.iter().zip(&rule.weights) {
                    let x = mu[1] * q1 + mu[2] * q2;
                    let wq = area * c * weight.value(x.norm());
                    discrete_mass += wq;
                    points.push((unrotate(*mu), wq));
                }
                let exact_mass = crate::quadrature::corner_angular_mass(weight, q1, q2);
                points.push((unrotate([1.0, 0.0, 0.0]), exact_mass - discrete_mass));
                Ok(points)
            })
            .collect();
        let mut rule = Self { offsets: vec![0], bary: Vec::new(), weights: Vec::new(), owners: Vec::new() };
        for (t, points) in per_triangle.into_iter().enumerate() {
            for (mu, c) in points? {
                rule.bary.push(mu);
                rule.weights.push(c);
                rule.owners.push(mesh.triangles[t]);
            }
            rule.offsets.push(rule.bary.len());
        }
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn num_triangles(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Point indices belonging to triangle `t`.
    pub fn triangle_points(&self, t: usize) -> std::ops::Range<usize> {
        self.offsets[t]..self.offsets[t + 1]
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn bary(&self, k: usize) -> [f64; 3] {
        self.bary[k]
    }

    pub fn owner(&self, k: usize) -> [usize; 3] {
        self.owners[k]
    }

    /// Value of the P1 function with vertex values `u` at point `k`.
    pub fn interpolate(&self, u: &[f64], k: usize) -> f64 {
        let [i, j, l] = self.owners[k];
        let mu = self.bary[k];
        mu[0] * u[i] + mu[1] * u[j] + mu[2] * u[l]
    }

    /// Values of the P1 function at every point.
    pub fn values(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|k| self.interpolate(u, k)).collect()
    }

    /// `∫ w` over triangle `t`.
    pub fn triangle_mass(&self, t: usize) -> f64 {
        self.weights[self.triangle_points(t)].iter().sum()
    }

    /// `Σ_k c_k F(u(x_k))`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, u: &[f64], f: F) -> f64 {
        (0..self.len()).map(|k| self.weights[k] * f(self.interpolate(u, k))).sum()
    }

    /// Gradient of `Σ_k c_k F(u(x_k))` with respect to the vertex values, given `F'`.
    pub fn integrate_gradient<F: Fn(f64) -> f64>(&self, u: &[f64], derivative: F) -> Vec<f64> {
        let mut grad = vec![0.0; u.len()];
        for k in 0..self.len() {
            let g = self.weights[k] * derivative(self.interpolate(u, k));
            let mu = self.bary[k];
            for (slot, &i) in self.owners[k].iter().enumerate() {
                grad[i] += g * mu[slot];
            }
        }
        grad
    }
}
