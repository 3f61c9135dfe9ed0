use super::ball::ball_integral;
use super::radial::{ExtendedLogWeight, SingularLogWeight};
use super::{WeightError, WeightParams};
use crate::geometry::Point;
use crate::quadrature::{integrate_pieces, RadialWeight, Tolerance};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

fn gradient_weight(params: &WeightParams) -> ExtendedLogWeight {
    ExtendedLogWeight {
        scale: params.scale,
        log_exponent: params.gradient_exponent,
        far_exponent: params.far_field_exponent,
    }
}

fn reciprocal_gradient_weight(params: &WeightParams) -> ExtendedLogWeight {
    ExtendedLogWeight {
        scale: params.scale,
        log_exponent: -params.gradient_exponent,
        far_exponent: -params.far_field_exponent,
    }
}

fn check_scan_params(params: &WeightParams, r: f64) -> Result<(), WeightError> {
    params.validate()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(WeightError::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

/// `S(x, r) = (∫_{B_r(x)} ω)(∫_{B_r(x)} ω⁻¹) / (π² r⁴)` for the gradient weight
/// `ω` extended to the plane by `|x|^γ log^B(a)`.
pub fn muckenhoupt_s(center: Point, r: f64, params: &WeightParams) -> Result<f64, WeightError> {
    check_scan_params(params, r)?;
    if !(params.gradient_exponent >= 0.0) {
        return Err(WeightError::InvalidParameter(format!(
            "the Muckenhoupt scan needs 0 ≤ B < 1, got {}",
            params.gradient_exponent
        )));
    }
    Ok(muckenhoupt_radial(center.norm(), r, params))
}

fn muckenhoupt_radial(d: f64, r: f64, params: &WeightParams) -> f64 {
    let direct = ball_integral(&gradient_weight(params), d, r).value;
    let reciprocal = ball_integral(&reciprocal_gradient_weight(params), d, r).value;
    // Normalize each factor by the ball area before multiplying to avoid underflow for tiny balls.
    let area = PI * r * r;
    (direct / area) * (reciprocal / area)
}

/// The two factors of the Adams condition and their product `T · J^{p/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamsQuantities {
    /// `∫_{B_r(x) ∩ B_1} |y|^{−2} log^{−A}(a/|y|) dy`.
    pub t: f64,
    /// `∫_r^∞ (π t³)^{−1} ∫_{B_t(x)} ω⁻¹ dy dt`, truncated.
    pub j: f64,
    /// Upper bound on the discarded part of the `J` integral.
    pub j_tail_bound: f64,
    pub product: f64,
}

pub fn adams_quantities(center: Point, r: f64, params: &WeightParams) -> Result<AdamsQuantities, WeightError> {
    check_scan_params(params, r)?;
    if !(params.mass_exponent > 1.0) {
        return Err(WeightError::InvalidParameter(format!(
            "the Adams scan needs A > 1 for a finite T, got {}",
            params.mass_exponent
        )));
    }
    Ok(adams_radial(center.norm(), r, params))
}

fn adams_radial(d: f64, r: f64, params: &WeightParams) -> AdamsQuantities {
    let t = if d >= 1.0 + r {
        0.0
    } else {
        ball_integral(&SingularLogWeight { scale: params.scale, exponent: params.mass_exponent }, d, r).value
    };
    let (j, j_tail_bound) = adams_j(d, r, params);
    let product = if t == 0.0 { 0.0 } else { t * j.powf(0.5 * params.power) };
    AdamsQuantities { t, j, j_tail_bound, product }
}

/// Outer integral of `J` in the variable `log t`, extended until the tail
/// envelope drops below `1e-12` of the accumulated value.
fn adams_j(d: f64, r: f64, params: &WeightParams) -> (f64, f64) {
    let reciprocal = reciprocal_gradient_weight(params);
    let gamma = params.far_field_exponent;
    let tol = Tolerance::relative(1e-8).with_abs(1e-300);
    let integrand = |u: f64| {
        let t = u.exp();
        ball_integral(&reciprocal, d, t).value / (PI * t * t)
    };
    let chunk = |lo: f64, hi: f64| {
        let (ul, uh) = (lo.ln(), hi.ln());
        let n = ((uh - ul) / 1.5).ceil().max(1.0) as usize;
        let mut breaks: Vec<f64> = (0..=n).map(|i| ul + (uh - ul) * i as f64 / n as f64).collect();
        // Radii at which the ball starts to contain the origin or meets the unit circle.
        breaks.extend([d, (1.0 - d).abs(), 1.0 + d].iter().filter(|&&k| k > lo && k < hi).map(|k| k.ln()));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        integrate_pieces(integrand, &breaks, tol).value
    };
    // For t ≥ |x|: ∫_{B_t(x)} ω⁻¹ ≤ M₁ + c (2t)^{2−γ} with M₁ the unit-disk mass and
    // c = 2π log^{−B}(a) / (2 − γ), which integrates against (π t³)⁻¹ to the envelope below.
    let unit_mass = 2.0 * PI * reciprocal.disk_mass(1.0);
    let far = TAU * params.scale.ln().powf(-params.gradient_exponent) / (2.0 - gamma);
    let tail = |t: f64| unit_mass / (TAU * t * t) + far * 2f64.powf(2.0 - gamma) / (PI * gamma) * t.powf(-gamma);
    let mut upper = (4.0 * (d + r)).max(8.0);
    let mut value = chunk(r, upper);
    while tail(upper) > 1e-12 * value && upper < 1e200 {
        let next = upper * 1e3;
        value += chunk(upper, next);
        upper = next;
    }
    (value, tail(upper))
}

/// Which quantity a scan evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanQuantity {
    Muckenhoupt,
    Adams,
}

/// Scan grid: centres on equally spaced rays at log-spaced distances from the
/// origin (plus the origin itself), radii log-spaced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub rays: usize,
    pub center_count: usize,
    pub center_min: f64,
    pub center_max: f64,
    pub radius_count: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    pub include_origin: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            rays: 8,
            center_count: 20,
            center_min: 1e-6,
            center_max: 4.0,
            radius_count: 20,
            radius_min: 1e-6,
            radius_max: 4.0,
            include_origin: true,
        }
    }
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect(),
    }
}

impl GridSpec {
    /// Copy with the number of centre distances and radii doubled.
    pub fn doubled(&self) -> Self {
        Self { center_count: 2 * self.center_count, radius_count: 2 * self.radius_count, ..*self }
    }

    pub fn radii(&self) -> Vec<f64> {
        log_spaced(self.radius_min, self.radius_max, self.radius_count)
    }

    fn center_distances(&self) -> Vec<f64> {
        let mut d = if self.include_origin { vec![0.0] } else { vec![] };
        d.extend(log_spaced(self.center_min, self.center_max, self.center_count));
        d
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        let ranges_ok = self.center_min > 0.0
            && self.center_max >= self.center_min
            && self.radius_min > 0.0
            && self.radius_max >= self.radius_min;
        if !ranges_ok {
            return Err(WeightError::InvalidParameter("scan ranges must be positive and ordered".into()));
        }
        let centers = if self.include_origin { 1 } else { 0 } + self.rays.min(1) * self.center_count;
        if centers == 0 || self.radius_count == 0 {
            return Err(WeightError::EmptyGrid);
        }
        Ok(())
    }
}

/// Values of a scanned quantity over a grid of balls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub grid: Vec<(Point, f64)>,
    pub values: Vec<f64>,
    pub sup_estimate: f64,
    pub argmax: (Point, f64),
}

#[derive(Serialize)]
struct ScanSummary<'a> {
    sup_estimate: f64,
    argmax: &'a (Point, f64),
}

impl ScanReport {
    /// Rows `cx,cy,r,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cx,cy,r,value\n");
        for ((c, r), v) in self.grid.iter().zip(&self.values) {
            let _ = writeln!(out, "{},{},{},{}", c.x(), c.y(), r, v);
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::to_value(ScanSummary { sup_estimate: self.sup_estimate, argmax: &self.argmax })
            .expect("plain data serializes")
    }
}

/// Evaluates `quantity` over the grid and reports its supremum.
///
/// Both quantities depend on the centre only through `|x|`, so each distinct
/// `(|x|, r)` pair is evaluated once (in parallel) and shared by all rays.
pub fn scan_sup(quantity: ScanQuantity, params: &WeightParams, grid: &GridSpec) -> Result<ScanReport, WeightError> {
    grid.validate()?;
    check_scan_params(params, grid.radius_min)?;
    match quantity {
        ScanQuantity::Muckenhoupt if !(params.gradient_exponent >= 0.0) => {
            return Err(WeightError::InvalidParameter("the Muckenhoupt scan needs 0 ≤ B < 1".into()))
        }
        ScanQuantity::Adams if !(params.mass_exponent > 1.0) => {
            return Err(WeightError::InvalidParameter("the Adams scan needs A > 1".into()))
        }
        _ => {}
    }
    let distances = grid.center_distances();
    let radii = grid.radii();
    let pairs: Vec<(f64, f64)> = distances.iter().flat_map(|&d| radii.iter().map(move |&r| (d, r))).collect();
    let unique: Vec<f64> = pairs
        .par_iter()
        .map(|&(d, r)| match quantity {
            ScanQuantity::Muckenhoupt => muckenhoupt_radial(d, r, params),
            ScanQuantity::Adams => adams_radial(d, r, params).product,
        })
        .collect();
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (k, &d) in distances.iter().enumerate() {
        let directions: Vec<Point> = if d == 0.0 {
            vec![Point::ORIGIN]
        } else {
            (0..grid.rays).map(|i| Point::polar(d, TAU * i as f64 / grid.rays as f64)).collect()
        };
        for c in directions {
            for (m, &r) in radii.iter().enumerate() {
                points.push((c, r));
                values.push(unique[k * radii.len() + m]);
            }
        }
    }
    let best = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > values[best] { i } else { best });
    Ok(ScanReport { sup_estimate: values[best], argmax: points[best], grid: points, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(b: f64, gamma: f64) -> WeightParams {
        WeightParams { scale: 2.0, mass_exponent: 2.0, gradient_exponent: b, power: 2.0, far_field_exponent: gamma }
    }

    #[test]
    fn constant_weight_gives_unit_s() {
        let p = params(0.0, 1e-9);
        for (c, r) in [(Point::ORIGIN, 0.5), (Point::new(0.3, 0.2), 0.1)] {
            let s = muckenhoupt_s(c, r, &p).unwrap();
            assert!((s - 1.0).abs() < 1e-9, "{s}");
        }
    }

    #[test]
    fn s_is_at_least_one() {
        let p = params(0.5, 1.0);
        for d in [0.0, 1e-3, 0.5, 0.99, 1.5, 3.0] {
            for r in [1e-4, 0.01, 0.3, 1.0, 3.0] {
                let s = muckenhoupt_s(Point::new(d, 0.0), r, &p).unwrap();
                assert!(s >= 1.0 - 1e-9, "d={d} r={r}: {s}");
            }
        }
    }

    #[test]
    fn adams_t_vanishes_outside_unit_ball() {
        let p = params(0.5, 1.0).with_mass_offset(0.0);
        let q = adams_quantities(Point::new(2.0, 0.0), 0.5, &p).unwrap();
        assert_eq!(q.t, 0.0);
        assert_eq!(q.product, 0.0);
        assert!(q.j > 0.0 && q.j_tail_bound <= 1e-12 * q.j);
    }

    #[test]
    fn scan_is_deterministic_and_replicated_over_rays() {
        let p = params(0.5, 1.0);
        let grid = GridSpec { center_count: 3, radius_count: 3, ..GridSpec::default() };
        let a = scan_sup(ScanQuantity::Muckenhoupt, &p, &grid).unwrap();
        let b = scan_sup(ScanQuantity::Muckenhoupt, &p, &grid).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.grid.len(), (1 + 8 * 3) * 3);
        assert_eq!(a.values[3..6], a.values[6..9]);
        assert!(a.values.iter().all(|v| *v <= a.sup_estimate));
    }

    #[test]
    fn empty_grid_is_rejected() {
        let grid = GridSpec { radius_count: 0, ..GridSpec::default() };
        assert_eq!(scan_sup(ScanQuantity::Muckenhoupt, &params(0.5, 1.0), &grid), Err(WeightError::EmptyGrid));
    }
}
