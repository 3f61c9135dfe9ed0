use super::AnalysisError;
use crate::eigensolve::EigResult;
use crate::geometry::{signed_area2, Grading, Mesh, Point};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt::Write as _;

/// Number of rays sampled through the graded rings.
const RAYS: usize = 16;
/// Samples per ring interval along each ray.
const SAMPLES_PER_RING: usize = 4;
/// Rays whose largest `|u|` is below this fraction of the overall maximum sit
/// near a nodal line and are left out of the fit.
const NODAL_FRACTION: f64 = 1e-3;

/// `1/2 − √(1 − 4λ)/2`, defined for `λ ≤ 1/4`.
pub fn theoretical_exponent(lambda: f64) -> Result<f64, AnalysisError> {
    if !(lambda <= 0.25) {
        return Err(AnalysisError::InvalidParameter(format!("the exponent needs λ ≤ 1/4, got {lambda}")));
    }
    Ok(0.5 - 0.5 * (1.0 - 4.0 * lambda).sqrt())
}

/// Radial range `[r_lo, r_hi]` of the fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub r_lo: f64,
    pub r_hi: f64,
}

impl FitWindow {
    /// Between the graded rings `outer` and `inner` (`outer < inner`).
    pub fn between_rings(grading: &Grading, outer: usize, inner: usize) -> Self {
        Self { r_lo: grading.ring_radius(inner), r_hi: grading.ring_radius(outer) }
    }

    /// The inner half of the graded rings without the innermost two.
    pub fn inner_half(grading: &Grading) -> Self {
        let inner = grading.rings.saturating_sub(2).max(1);
        let outer = (grading.rings / 2).min(inner - 1);
        Self::between_rings(grading, outer, inner)
    }

    fn ring_intervals(&self, q: f64) -> usize {
        ((self.r_hi / self.r_lo).ln() / (1.0 / q).ln()).round().max(1.0) as usize
    }
}

/// One sample of the eigenfunction along a ray.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaySample {
    pub ray: usize,
    pub theta: f64,
    pub r: f64,
    pub u: f64,
}

/// Least-squares exponent of `|u|` against `log(a/r)` near the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub lambda: f64,
    pub alpha_fit: f64,
    pub alpha_theory: f64,
    pub r_window: (f64, f64),
    /// Mean coefficient of determination over the rays used.
    pub regression_r2: f64,
    /// Samples per ray.
    pub samples: usize,
    pub rays_used: usize,
    /// Slope on each ray used.
    pub ray_slopes: Vec<f64>,
    /// `sup |u| / log(a/r)^{alpha_theory}` over the window.
    pub sup_scaled: f64,
    #[serde(skip)]
    pub ray_samples: Vec<RaySample>,
}

impl FitResult {
    /// Samples as CSV: `ray, theta, r, u, log log(a/r), log|u|`.
    pub fn samples_csv(&self, a: f64) -> String {
        let mut out = String::from("ray,theta,r,u,loglog,log_abs_u\n");
        for s in &self.ray_samples {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e}",
                s.ray,
                s.theta,
                s.r,
                s.u,
                (a / s.r).ln().ln(),
                s.u.abs().ln()
            );
        }
        out
    }
}

/// Brute-force point location restricted to triangles near the origin.
struct Locator<'a> {
    mesh: &'a Mesh,
    candidates: Vec<usize>,
}

impl<'a> Locator<'a> {
    fn new(mesh: &'a Mesh, radius: f64) -> Self {
        let candidates = (0..mesh.num_triangles())
            .filter(|&t| {
                let pts = mesh.triangle_points(t);
                let nearest = pts.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
                let longest = (0..3).map(|i| pts[i].distance(pts[(i + 1) % 3])).fold(0.0, f64::max);
                nearest - longest <= radius
            })
            .collect();
        Self { mesh, candidates }
    }

    fn evaluate(&self, u: &[f64], p: Point) -> Option<f64> {
        self.candidates.iter().find_map(|&t| {
            let [i, j, k] = self.mesh.triangles[t];
            let [a, b, c] = self.mesh.triangle_points(t);
            let total = signed_area2(a, b, c);
            let slack = -1e-12 * total;
            let mu = [signed_area2(p, b, c), signed_area2(a, p, c), signed_area2(a, b, p)];
            mu.iter().all(|&m| m >= slack).then(|| (mu[0] * u[i] + mu[1] * u[j] + mu[2] * u[k]) / total)
        })
    }
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy <= 1e-28 * n * (1.0 + my * my) { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Fits the exponent of `|u| ~ log(a/r)^α` along rays through the graded rings
/// and measures `sup |u| / log(a/r)^{α(λ)}` on the window.
pub fn asymptotic_exponent_fit(
    eig: &EigResult,
    mesh: &Mesh,
    a: f64,
    window: Option<FitWindow>,
) -> Result<FitResult, AnalysisError> {
    if !(a > 1.0 && a.is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!("a must be > 1, got {a}")));
    }
    if eig.coefficients.len() != mesh.num_vertices() {
        return Err(AnalysisError::InvalidParameter("eigenvector does not match the mesh".into()));
    }
    let alpha_theory = theoretical_exponent(eig.lambda)?;
    let window = window.unwrap_or_else(|| FitWindow::inner_half(&mesh.grading));
    if !(window.r_lo > 0.0 && window.r_lo < window.r_hi && window.r_hi < a) {
        return Err(AnalysisError::WindowOutsideMesh(window.r_lo, window.r_hi));
    }
    let n = (SAMPLES_PER_RING * window.ring_intervals(mesh.grading.q) + 1).max(10);
    let radii: Vec<f64> =
        (0..n).map(|i| window.r_hi * (window.r_lo / window.r_hi).powf(i as f64 / (n - 1) as f64)).collect();
    let locator = Locator::new(mesh, window.r_hi);
    let u = &eig.coefficients;

    let rays: Vec<(usize, f64, Vec<f64>)> = (0..RAYS)
        .filter_map(|ray| {
            let theta = TAU * (ray as f64 + 0.5) / RAYS as f64;
            let values: Option<Vec<f64>> = radii.iter().map(|&r| locator.evaluate(u, Point::polar(r, theta))).collect();
            values.map(|v| (ray, theta, v))
        })
        .collect();
    if rays.is_empty() {
        return Err(AnalysisError::WindowOutsideMesh(window.r_lo, window.r_hi));
    }
    let peak = rays.iter().flat_map(|(_, _, v)| v.iter()).fold(0.0_f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return Err(AnalysisError::VanishingEigenfunction);
    }

    let xs: Vec<f64> = radii.iter().map(|r| (a / r).ln().ln()).collect();
    let mut slopes = Vec::new();
    let mut r2_sum = 0.0;
    let mut sup_scaled = 0.0_f64;
    let mut ray_samples = Vec::new();
    for (ray, theta, values) in &rays {
        let sign = values[0].signum();
        let usable = values.iter().all(|v| v.signum() == sign && *v != 0.0)
            && values.iter().fold(0.0_f64, |m, x| m.max(x.abs())) >= NODAL_FRACTION * peak;
        if !usable {
            continue;
        }
        let ys: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
        let (slope, r2) = least_squares(&xs, &ys);
        slopes.push(slope);
        r2_sum += r2;
        for (&r, &v) in radii.iter().zip(values) {
            sup_scaled = sup_scaled.max(v.abs() / (a / r).ln().powf(alpha_theory));
            ray_samples.push(RaySample { ray: *ray, theta: *theta, r, u: v });
        }
    }
    if slopes.is_empty() {
        return Err(AnalysisError::VanishingEigenfunction);
    }
    let used = slopes.len();
    Ok(FitResult {
        lambda: eig.lambda,
        alpha_fit: slopes.iter().sum::<f64>() / used as f64,
        alpha_theory,
        r_window: (window.r_lo, window.r_hi),
        regression_r2: r2_sum / used as f64,
        samples: n,
        rays_used: used,
        ray_slopes: slopes,
        sup_scaled,
        ray_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec};

    fn result_for(mesh: &Mesh, lambda: f64, f: impl Fn(Point) -> f64) -> EigResult {
        EigResult {
            lambda,
            coefficients: mesh.vertices.iter().map(|&p| f(p)).collect(),
            residual_norm: 0.0,
            iterations: 0,
            constraint_violation: 0.0,
            history: vec![],
            converged: true,
            next_lambda: None,
            unbounded: false,
        }
    }

    #[test]
    fn exponent_formula_endpoints() {
        assert_eq!(theoretical_exponent(0.0).unwrap(), 0.0);
        assert_eq!(theoretical_exponent(0.25).unwrap(), 0.5);
        assert!(theoretical_exponent(0.3).is_err());
    }

    #[test]
    fn constant_function_has_zero_exponent() {
        let mesh = build_mesh(&DomainSpec::Disk { radius: 1.0 }, 0.2, 0.5, 12).unwrap();
        let fit = asymptotic_exponent_fit(&result_for(&mesh, 0.0, |_| 1.0), &mesh, 2.0, None).unwrap();
        assert!(fit.alpha_fit.abs() < 1e-10 && fit.alpha_theory == 0.0, "{fit:?}");
        assert!(fit.samples >= 10 && fit.rays_used == RAYS);
        assert!((fit.sup_scaled - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_a_planted_log_power() {
        // Nodal values of log(a/r)^{0.3}; the P1 interpolant between vertices
        // perturbs the slope only slightly.
        let a = 1.5;
        let mesh = build_mesh(&DomainSpec::Disk { radius: 1.0 }, 0.1, 0.5, 16).unwrap();
        let f = |p: Point| if p.norm() == 0.0 { (a / 1e-300_f64).ln().powf(0.3) } else { (a / p.norm()).ln().powf(0.3) };
        let fit = asymptotic_exponent_fit(&result_for(&mesh, 0.21, f), &mesh, a, None).unwrap();
        assert!((fit.alpha_fit - 0.3).abs() < 0.01, "{fit:?}");
        assert!(fit.regression_r2 > 0.999);
    }

    #[test]
    fn window_outside_mesh_is_rejected() {
        let mesh = build_mesh(&DomainSpec::Disk { radius: 1.0 }, 0.3, 0.5, 6).unwrap();
        let eig = result_for(&mesh, 0.1, |_| 1.0);
        let window = FitWindow { r_lo: 0.5, r_hi: 0.2 };
        assert!(matches!(
            asymptotic_exponent_fit(&eig, &mesh, 2.0, Some(window)),
            Err(AnalysisError::WindowOutsideMesh(..))
        ));
        let outside = FitWindow { r_lo: 1.5, r_hi: 1.8 };
        assert!(asymptotic_exponent_fit(&eig, &mesh, 2.0, Some(outside)).is_err());
    }

    #[test]
    fn default_window_skips_the_innermost_rings() {
        let grading = Grading { q: 0.5, rings: 12, r_max: 0.5 };
        let w = FitWindow::inner_half(&grading);
        assert_eq!(w.r_lo, grading.ring_radius(10));
        assert_eq!(w.r_hi, grading.ring_radius(6));
    }
}
