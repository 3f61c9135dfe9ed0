use super::operator::{OperatorKind, SymmetricOperator};
use super::rule::WeightedRule;
use super::AssemblyError;
use crate::geometry::{BoundaryTag, Mesh};
use crate::quadrature::edge_rule;
use crate::weights::{HardyWeight, LogPowerWeight};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

type Element = ([usize; 3], [[f64; 3]; 3]);

/// Computes element matrices in parallel, then scatters them in element order.
fn assemble<F>(mesh: &Mesh, kind: OperatorKind, element: F) -> Result<SymmetricOperator, AssemblyError>
where
    F: Fn(usize) -> Result<Element, AssemblyError> + Sync + Send,
{
    let elements: Vec<Element> = (0..mesh.num_triangles()).into_par_iter().map(element).collect::<Result<_, _>>()?;
    let mut entries = Vec::with_capacity(9 * elements.len());
    for (tri, local) in &elements {
        for a in 0..3 {
            for b in 0..3 {
                entries.push((tri[a], tri[b], local[a][b]));
            }
        }
    }
    Ok(SymmetricOperator::from_entries(kind, mesh.num_vertices(), &entries))
}

fn checked_area(mesh: &Mesh, t: usize) -> Result<f64, AssemblyError> {
    let area = mesh.triangle_area(t);
    if area > 0.0 {
        Ok(area)
    } else {
        Err(AssemblyError::DegenerateTriangle(t))
    }
}

/// `∫_T ∇φ_a · ∇φ_b` times `|T|`: the P1 gradient of vertex `a` is the rotated
/// opposite edge divided by `2|T|`, so the product is `e_a · e_b / (4|T|²)`.
fn gradient_products(mesh: &Mesh, t: usize) -> [[f64; 3]; 3] {
    let [p0, p1, p2] = mesh.triangle_points(t);
    let edges = [p2 - p1, p0 - p2, p1 - p0];
    let area = mesh.triangle_area(t);
    let mut g = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in a..3 {
            let v = edges[a].dot(edges[b]) / (4.0 * area * area);
            g[a][b] = v;
            g[b][a] = v;
        }
    }
    g
}

fn scaled(g: [[f64; 3]; 3], s: f64) -> [[f64; 3]; 3] {
    g.map(|row| row.map(|v| v * s))
}

fn check_scale(a: f64) -> Result<(), AssemblyError> {
    if a > 1.0 && a.is_finite() {
        Ok(())
    } else {
        Err(AssemblyError::InvalidParameter(format!("a must be > 1, got {a}")))
    }
}

/// `∫ ∇φ_i · ∇φ_j dx`.
pub fn stiffness(mesh: &Mesh) -> Result<SymmetricOperator, AssemblyError> {
    assemble(mesh, OperatorKind::Stiffness, |t| {
        let area = checked_area(mesh, t)?;
        Ok((mesh.triangles[t], scaled(gradient_products(mesh, t), area)))
    })
}

/// `∫ log^B(a/|x|) ∇φ_i · ∇φ_j dx`. Any real exponent is accepted so the
/// same routine serves the transformed equation with exponent `2α`.
pub fn weighted_stiffness(mesh: &Mesh, a: f64, exponent: f64) -> Result<SymmetricOperator, AssemblyError> {
    check_scale(a)?;
    if !exponent.is_finite() {
        return Err(AssemblyError::InvalidParameter(format!("exponent must be finite, got {exponent}")));
    }
    if exponent == 0.0 {
        return Ok(stiffness(mesh)?.with_kind(OperatorKind::WeightedStiffness));
    }
    let rule = WeightedRule::new(mesh, &LogPowerWeight { scale: a, exponent })?;
    weighted_stiffness_with(mesh, &rule)
}

/// Weighted stiffness with a precomputed rule for the gradient weight.
pub fn weighted_stiffness_with(mesh: &Mesh, rule: &WeightedRule) -> Result<SymmetricOperator, AssemblyError> {
    assemble(mesh, OperatorKind::WeightedStiffness, |t| {
        checked_area(mesh, t)?;
        Ok((mesh.triangles[t], scaled(gradient_products(mesh, t), rule.triangle_mass(t))))
    })
}

/// `∫ φ_i φ_j / (|x|² log²(a/|x|)) dx`.
pub fn hardy_mass(mesh: &Mesh, a: f64) -> Result<SymmetricOperator, AssemblyError> {
    check_scale(a)?;
    let rule = WeightedRule::new(mesh, &HardyWeight::new(a))?;
    weighted_mass_with(mesh, &rule, OperatorKind::HardyMass)
}

/// `Σ_k c_k φ_i(x_k) φ_j(x_k)` over the points of a weighted rule.
pub fn weighted_mass_with(mesh: &Mesh, rule: &WeightedRule, kind: OperatorKind) -> Result<SymmetricOperator, AssemblyError> {
    if rule.num_triangles() != mesh.num_triangles() {
        return Err(AssemblyError::DimensionMismatch);
    }
    assemble(mesh, kind, |t| {
        let mut local = [[0.0; 3]; 3];
        for k in rule.triangle_points(t) {
            let mu = rule.bary(k);
            let c = rule.weight(k);
            for a in 0..3 {
                for b in a..3 {
                    local[a][b] += c * mu[a] * mu[b];
                }
            }
        }
        for a in 0..3 {
            for b in 0..a {
                local[a][b] = local[b][a];
            }
        }
        Ok((mesh.triangles[t], local))
    })
}

/// `∫ φ_i φ_j dx`, exact for P1.
pub fn plain_mass(mesh: &Mesh) -> Result<SymmetricOperator, AssemblyError> {
    assemble(mesh, OperatorKind::PlainMass, |t| {
        let area = checked_area(mesh, t)?;
        let mut local = [[area / 12.0; 3]; 3];
        for (a, row) in local.iter_mut().enumerate() {
            row[a] = area / 6.0;
        }
        Ok((mesh.triangles[t], local))
    })
}

/// Boundary coefficient as a function of the polar angle `θ ∈ [0, 2π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaSpec {
    Constant { value: f64 },
    /// `values[k]` on `[breaks[k], breaks[k + 1])`, the last piece wrapping
    /// around to `breaks[0] + 2π`.
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    /// `mean + amplitude · cos(frequency · (θ − phase))`.
    Cosine { mean: f64, amplitude: f64, frequency: u32, phase: f64 },
}

impl BetaSpec {
    pub fn validate(&self) -> Result<(), AssemblyError> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let ok = match self {
            BetaSpec::Constant { value } => value.is_finite(),
            BetaSpec::Piecewise { breaks, values } => {
                !breaks.is_empty()
                    && breaks.len() == values.len()
                    && finite(breaks)
                    && finite(values)
                    && breaks.windows(2).all(|w| w[0] < w[1])
                    && breaks[breaks.len() - 1] - breaks[0] < TAU
            }
            BetaSpec::Cosine { mean, amplitude, phase, .. } => finite(&[*mean, *amplitude, *phase]),
        };
        if ok {
            Ok(())
        } else {
            Err(AssemblyError::InvalidParameter(format!("invalid boundary coefficient {self:?}")))
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        match self {
            BetaSpec::Constant { value } => *value,
            BetaSpec::Piecewise { breaks, values } => {
                let shifted = (theta - breaks[0]).rem_euclid(TAU) + breaks[0];
                let k = breaks.partition_point(|&b| b <= shifted);
                values[k.max(1) - 1]
            }
            BetaSpec::Cosine { mean, amplitude, frequency, phase } => {
                mean + amplitude * (f64::from(*frequency) * (theta - phase)).cos()
            }
        }
    }

    /// `sup |β|` over angles, used by the Robin upper bound.
    pub fn sup_norm(&self) -> f64 {
        match self {
            BetaSpec::Constant { value } => value.abs(),
            BetaSpec::Piecewise { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
            BetaSpec::Cosine { mean, amplitude, .. } => mean.abs() + amplitude.abs(),
        }
    }
}

/// Edges carrying the Robin term: the outer boundary and the graph part.
fn robin_edge(tag: BoundaryTag) -> bool {
    matches!(tag, BoundaryTag::Outer | BoundaryTag::Graph)
}

/// `∫_{∂Ω} β φ_i φ_j dS` over outer and graph edges.
pub fn boundary_mass(mesh: &Mesh, beta: &BetaSpec) -> Result<SymmetricOperator, AssemblyError> {
    beta.validate()?;
    let line = edge_rule(7)?;
    let mut entries = Vec::with_capacity(4 * mesh.boundary.len());
    for (e, edge) in mesh.boundary.iter().enumerate().filter(|(_, e)| robin_edge(e.tag())) {
        let [i, j] = edge.vertices();
        let (p, q) = (mesh.vertices[i], mesh.vertices[j]);
        let length = p.distance(q);
        let mut local = [[0.0; 2]; 2];
        for (s, c) in line.points.iter().zip(&line.weights) {
            let x = (1.0 - s) * p + *s * q;
            let b = beta.value(x.angle().rem_euclid(TAU));
            if !b.is_finite() {
                return Err(AssemblyError::NonFiniteBeta(e));
            }
            let phi = [1.0 - s, *s];
            for a in 0..2 {
                for bb in 0..2 {
                    local[a][bb] += length * c * b * phi[a] * phi[bb];
                }
            }
        }
        for (a, va) in [i, j].into_iter().enumerate() {
            for (bb, vb) in [i, j].into_iter().enumerate() {
                entries.push((va, vb, local[a][bb]));
            }
        }
    }
    Ok(SymmetricOperator::from_entries(OperatorKind::BoundaryMass, mesh.num_vertices(), &entries))
}

/// `w_i = ∫ φ_i / (|x|² log²(a/|x|)) dx`, the weighted-average functional.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintVector(pub Vec<f64>);

impl ConstraintVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `wᵀu`.
    pub fn apply(&self, u: &[f64]) -> f64 {
        self.0.iter().zip(u).map(|(w, x)| w * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

pub fn constraint_vector(mesh: &Mesh, a: f64) -> Result<ConstraintVector, AssemblyError> {
    check_scale(a)?;
    let rule = WeightedRule::new(mesh, &HardyWeight::new(a))?;
    Ok(constraint_vector_with(mesh, &rule))
}

/// Constraint vector from a precomputed rule; equals `M_w · 1` for the mass
/// matrix built from the same rule.
pub fn constraint_vector_with(mesh: &Mesh, rule: &WeightedRule) -> ConstraintVector {
    let mut w = vec![0.0; mesh.num_vertices()];
    for k in 0..rule.len() {
        let mu = rule.bary(k);
        for (slot, &i) in rule.owner(k).iter().enumerate() {
            w[i] += rule.weight(k) * mu[slot];
        }
    }
    ConstraintVector(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec};
    use std::f64::consts::PI;

    fn disk(h: f64) -> Mesh {
        build_mesh(&DomainSpec::Disk { radius: 1.0 }, h, 0.5, 8).unwrap()
    }

    #[test]
    fn stiffness_kills_constants() {
        let mesh = disk(0.2);
        let k = stiffness(&mesh).unwrap();
        let ones = vec![1.0; mesh.num_vertices()];
        assert!(k.apply(&ones).iter().all(|v| v.abs() < 1e-12));
        assert_eq!(k.symmetry_defect(), 0.0);
    }

    #[test]
    fn stiffness_energy_of_linear_function_is_area() {
        let mesh = disk(0.2);
        let k = stiffness(&mesh).unwrap();
        let u: Vec<f64> = mesh.vertices.iter().map(|p| p.x()).collect();
        assert!((k.quadratic_form(&u) - mesh.area()).abs() < 1e-12);
    }

    #[test]
    fn zero_exponent_reproduces_stiffness() {
        let mesh = disk(0.2);
        let k = stiffness(&mesh).unwrap();
        let kb = weighted_stiffness(&mesh, 2.0, 0.0).unwrap();
        for i in 0..mesh.num_vertices() {
            for (j, v) in k.row(i) {
                assert!((kb.get(i, j) - v).abs() <= 1e-14 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn plain_mass_of_constants_is_area() {
        let mesh = disk(0.2);
        let m = plain_mass(&mesh).unwrap();
        let ones = vec![1.0; mesh.num_vertices()];
        assert!((m.quadratic_form(&ones) - mesh.area()).abs() < 1e-12);
    }

    #[test]
    fn constraint_vector_is_mass_times_ones() {
        let mesh = disk(0.2);
        let m = hardy_mass(&mesh, 1.5).unwrap();
        let w = constraint_vector(&mesh, 1.5).unwrap();
        let ones = vec![1.0; mesh.num_vertices()];
        for (a, b) in m.apply(&ones).iter().zip(w.as_slice()) {
            assert!((a - b).abs() <= 1e-13 * b.abs(), "{a} vs {b}");
            assert!(*b > 0.0);
        }
    }

    #[test]
    fn beta_piecewise_wraps() {
        let beta = BetaSpec::Piecewise { breaks: vec![1.0, 3.0], values: vec![2.0, -1.0] };
        beta.validate().unwrap();
        assert_eq!(beta.value(2.0), 2.0);
        assert_eq!(beta.value(4.0), -1.0);
        assert_eq!(beta.value(0.5), -1.0);
        assert_eq!(beta.sup_norm(), 2.0);
    }

    #[test]
    fn unit_beta_gives_perimeter() {
        let mesh = disk(0.1);
        let b = boundary_mass(&mesh, &BetaSpec::Constant { value: 1.0 }).unwrap();
        let ones = vec![1.0; mesh.num_vertices()];
        let n = mesh.boundary.len() as f64;
        let polygon = n * 2.0 * (PI / n).sin();
        assert!((b.quadratic_form(&ones) - polygon).abs() < 1e-12);
    }

    #[test]
    fn non_finite_beta_is_rejected() {
        let mesh = disk(0.3);
        let bad = BetaSpec::Constant { value: f64::NAN };
        assert!(boundary_mass(&mesh, &bad).is_err());
    }
}
