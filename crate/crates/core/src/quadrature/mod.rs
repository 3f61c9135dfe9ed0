//! Triangle and edge quadrature, including the rule used on elements that
//! have the singular point of the weight as a vertex.

mod adaptive;
mod corner;
mod gauss;

pub use adaptive::{integrate, integrate_log, integrate_pieces, Integral, Tolerance};
pub use corner::{corner_angular_mass, CornerIntegrator, RadialWeight};
pub use gauss::{gauss_legendre, gauss_legendre_unit};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("unsupported quadrature degree {0} (supported: {1})")]
    UnsupportedDegree(usize, &'static str),
    #[error("singular rule needs at least 2 levels, got {0}")]
    TooFewLevels(usize),
}

/// A rule on the reference triangle: barycentric points, weights summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Applies the rule to `f` given in barycentric coordinates, times `area`.
    pub fn apply<F: FnMut([f64; 3]) -> f64>(&self, area: f64, mut f: F) -> f64 {
        area * self.points.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum::<f64>()
    }
}

/// A Gauss–Legendre rule on the unit interval, weights summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

fn push_orbit_s3(rule: &mut QuadRule, w: f64) {
    rule.points.push([1.0 / 3.0; 3]);
    rule.weights.push(w);
}

fn push_orbit_s21(rule: &mut QuadRule, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    for p in [[b, a, a], [a, b, a], [a, a, b]] {
        rule.points.push(p);
        rule.weights.push(w);
    }
}

fn push_orbit_s111(rule: &mut QuadRule, a: f64, b: f64, w: f64) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        rule.points.push(p);
        rule.weights.push(w);
    }
}

fn empty(degree: usize) -> QuadRule {
    QuadRule { points: Vec::new(), weights: Vec::new(), degree }
}

/// Conical-product Gauss rule averaged over the six vertex permutations, which
/// makes it fully symmetric while keeping positive weights.
fn symmetrized_conical(degree: usize) -> QuadRule {
    let n = (degree + 2).div_ceil(2);
    let (x, w) = gauss_legendre_unit(n);
    let mut rule = empty(degree);
    for (u, wu) in x.iter().zip(&w) {
        for (v, wv) in x.iter().zip(&w) {
            // (x, y) = (u, v (1 - u)), Jacobian (1 - u); reference area 1/2.
            let px = *u;
            let py = v * (1.0 - u);
            let weight = 2.0 * wu * wv * (1.0 - u) / 6.0;
            let l = [1.0 - px - py, px, py];
            for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                rule.points.push([l[perm[0]], l[perm[1]], l[perm[2]]]);
                rule.weights.push(weight);
            }
        }
    }
    rule
}

/// Symmetric rule with positive weights, exact for polynomials of total
/// degree `degree` (the returned `degree` field may be higher).
pub fn standard_rule(degree: usize) -> Result<QuadRule, QuadratureError> {
    let rule = match degree {
        1 => {
            let mut r = empty(1);
            push_orbit_s3(&mut r, 1.0);
            r
        }
        2 => {
            let mut r = empty(2);
            push_orbit_s21(&mut r, 1.0 / 6.0, 1.0 / 3.0);
            r
        }
        3 | 4 => {
            let mut r = empty(4);
            push_orbit_s21(&mut r, 0.445_948_490_915_965, 0.223_381_589_678_011);
            push_orbit_s21(&mut r, 0.091_576_213_509_771, 0.109_951_743_655_322);
            r
        }
        5 => {
            let mut r = empty(5);
            push_orbit_s3(&mut r, 0.225);
            push_orbit_s21(&mut r, 0.470_142_064_105_115, 0.132_394_152_788_506);
            push_orbit_s21(&mut r, 0.101_286_507_323_456, 0.125_939_180_544_827);
            r
        }
        6 => {
            let mut r = empty(6);
            push_orbit_s21(&mut r, 0.249_286_745_170_910, 0.116_786_275_726_379);
            push_orbit_s21(&mut r, 0.063_089_014_491_502, 0.050_844_906_370_207);
            push_orbit_s111(&mut r, 0.053_145_049_844_817, 0.310_352_451_033_784, 0.082_851_075_618_374);
            r
        }
        7 | 8 => {
            let mut r = empty(8);
            push_orbit_s3(&mut r, 0.144_315_607_677_787);
            push_orbit_s21(&mut r, 0.459_292_588_292_723, 0.095_091_634_267_285);
            push_orbit_s21(&mut r, 0.170_569_307_751_760, 0.103_217_370_534_718);
            push_orbit_s21(&mut r, 0.050_547_228_317_031, 0.032_458_497_623_198);
            push_orbit_s111(&mut r, 0.008_394_777_409_958, 0.263_112_829_634_638, 0.027_230_314_174_435);
            r
        }
        9 | 10 => symmetrized_conical(degree),
        _ => return Err(QuadratureError::UnsupportedDegree(degree, "1..=10")),
    };
    Ok(rule)
}

/// Composite rule for a triangle whose barycentric vertex 0 is singular.
///
/// The triangle is cut into geometric layers by repeated red subdivision of
/// the corner child (ratio 1/2). Each layer carries the three non-corner
/// children with the degree-4 rule; the final corner child also gets the
/// degree-4 rule, so the composite stays exact for quartics. No point lies at
/// the corner itself.
pub fn origin_singular_rule(levels: usize) -> Result<QuadRule, QuadratureError> {
    corner_geometric_rule(levels, 4)
}

/// Geometric corner subdivision with `levels` layers and `standard_rule(degree)` per piece.
pub fn corner_geometric_rule(levels: usize, degree: usize) -> Result<QuadRule, QuadratureError> {
    if levels < 2 {
        return Err(QuadratureError::TooFewLevels(levels));
    }
    let base = standard_rule(degree)?;
    let mut rule = empty(degree);
    // Children of the corner triangle (v0, v1, v2) with v0 = corner, in barycentric
    // coordinates of the current layer's triangle.
    let mut scale = 1.0;
    let push_child = |rule: &mut QuadRule, verts: [[f64; 3]; 3], scale: f64| {
        for (p, w) in base.points.iter().zip(&base.weights) {
            let mut q = [0.0; 3];
            for k in 0..3 {
                q[k] = p[0] * verts[0][k] + p[1] * verts[1][k] + p[2] * verts[2][k];
            }
            // Map from the layer triangle (corner at v0, scaled by `scale`) back to
            // the reference triangle.
            let l1 = q[1] * scale;
            let l2 = q[2] * scale;
            rule.points.push([1.0 - l1 - l2, l1, l2]);
            rule.weights.push(w * scale * scale / 4.0);
        }
    };
    let m01 = [0.5, 0.5, 0.0];
    let m12 = [0.0, 0.5, 0.5];
    let m20 = [0.5, 0.0, 0.5];
    let v1 = [0.0, 1.0, 0.0];
    let v2 = [0.0, 0.0, 1.0];
    for _ in 0..levels {
        push_child(&mut rule, [m01, v1, m12], scale);
        push_child(&mut rule, [m20, m12, v2], scale);
        push_child(&mut rule, [m12, m20, m01], scale);
        scale *= 0.5;
    }
    // Innermost corner triangle, scaled copy of the reference.
    for (p, w) in base.points.iter().zip(&base.weights) {
        let l1 = p[1] * scale;
        let l2 = p[2] * scale;
        rule.points.push([1.0 - l1 - l2, l1, l2]);
        rule.weights.push(w * scale * scale);
    }
    Ok(rule)
}

/// Gauss–Legendre rule on `[0, 1]` exact to `degree`.
pub fn edge_rule(degree: usize) -> Result<LineRule, QuadratureError> {
    if !(1..=61).contains(&degree) {
        return Err(QuadratureError::UnsupportedDegree(degree, "1..=61"));
    }
    let n = degree / 2 + 1;
    let (points, weights) = gauss_legendre_unit(n);
    Ok(LineRule { points, weights, degree: 2 * n - 1 })
}
