use super::AnalysisError;
use crate::quadrature::{gauss_legendre_unit, integrate_pieces, Tolerance};
use crate::rng::SplitMix64;
use crate::weights::WeightParams;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Decay lengths `1/λ` of the scaled profile covered by the quadrature.
const PROFILE_DECAY_LENGTHS: usize = 60;

/// Quotient `∫ log^B(a/r) |∇u_λ|² dx / (∫ |u_λ|^p / (r² log^A(a/r)) dx)^{2/p}`
/// of the scaled radial profile
/// `u_λ(x) = λ^{−(1−B)/2} u((|x|/a)^{λ−1} x)` with `u(r) = (1 − r)²` on the
/// unit ball.
///
/// All integrals are one-dimensional in `t = log(a/r)`. The scaled profile is
/// supported on `t ≥ log(a)/λ`, and the constant it tends to as `r → 0` is
/// integrated against `t^{−A}` in closed form. For `A ≤ 1` that integral
/// diverges and the quotient is zero.
pub fn scaling_family_quotient(lambda_scale: f64, params: &WeightParams) -> Result<f64, AnalysisError> {
    if !(lambda_scale > 0.0 && lambda_scale <= 1.0) {
        return Err(AnalysisError::InvalidParameter(format!("scale must lie in (0, 1], got {lambda_scale}")));
    }
    params.validate()?;
    let a = params.scale;
    let (b, big_a, p) = (params.gradient_exponent, params.mass_exponent, params.power);
    if big_a <= 1.0 {
        return Ok(0.0);
    }
    let amplitude = lambda_scale.powf(-0.5 * (1.0 - b));
    let start = a.ln() / lambda_scale;
    // r = a e^{−t}, ρ = a^{1−λ} r^λ = e^{−λ(t − start)} is the argument of the
    // base profile; the product form underflows for small λ.
    let rho = |t: f64| (-lambda_scale * (t - start)).exp();
    let breaks: Vec<f64> =
        (0..=PROFILE_DECAY_LENGTHS).map(|k| start + k as f64 / lambda_scale).collect();
    let tol = Tolerance::relative(1e-13).with_abs(1e-300);

    // |du/dt| = r |du/dr| = 2 c λ ρ (1 − ρ).
    let energy = integrate_pieces(
        |t| {
            let s = rho(t);
            let d = 2.0 * amplitude * lambda_scale * s * (1.0 - s);
            t.powf(b) * d * d
        },
        &breaks,
        tol,
    )
    .value;
    // |u|^p = c^p (1 − ρ)^{2p}; split off c^p, whose integral is closed form.
    let deficit = integrate_pieces(|t| (2.0 * p * (-rho(t)).ln_1p()).exp_m1() * t.powf(-big_a), &breaks, tol).value;
    let plateau = start.powf(1.0 - big_a) / (big_a - 1.0);
    let mass = amplitude.powf(p) * (plateau + deficit);
    Ok(2.0 * PI * energy / (2.0 * PI * mass).powf(2.0 / p))
}

/// Result of the radial check of the pointwise bound with a logarithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialLemmaReport {
    pub a: f64,
    pub gradient_exponent: f64,
    pub samples: usize,
    pub seed: u64,
    /// Largest `|u(r)| / (E^{1/2} log(a/r)^{(1−B)/2})` over samples and grid.
    pub max_ratio: f64,
    /// Radius where the largest ratio occurs.
    pub argmax_r: f64,
}

/// Radii of the evaluation grid, log-spaced from `1e-12` to 1.
fn lemma_grid() -> Vec<f64> {
    let n = 241;
    (0..n).map(|i| 10f64.powf(-12.0 * (1.0 - i as f64 / (n - 1) as f64))).collect()
}

fn eval_poly(coeffs: &[f64], r: f64) -> (f64, f64) {
    let (mut p, mut dp) = (0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * r + p;
        p = p * r + c;
    }
    (p, dp)
}

/// Largest ratio and its radius for `u(r) = (1 − r) Σ_k c_k r^k`.
pub(crate) fn radial_lemma_ratio(coeffs: &[f64], a: f64, b: f64) -> (f64, f64) {
    let profile = |r: f64| {
        let (p, dp) = eval_poly(coeffs, r);
        ((1.0 - r) * p, (1.0 - r) * dp - p)
    };
    let energy = 2.0
        * PI
        * integrate_pieces(
            |r| {
                let d = profile(r).1;
                (a / r).ln().powf(b) * d * d * r
            },
            &[0.0, 1e-6, 1e-3, 0.1, 0.5, 1.0],
            Tolerance::relative(1e-10).with_abs(1e-300),
        )
        .value;
    if energy == 0.0 {
        return (0.0, 1.0);
    }
    lemma_grid()
        .into_iter()
        .map(|r| (profile(r).0.abs() / (energy.sqrt() * (a / r).ln().powf(0.5 * (1.0 - b))), r))
        .fold((0.0, 1.0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

/// Samples random radial polynomials `(1 − r)(c₀ + c₁r + c₂r² + c₃r³)` with
/// coefficients uniform in `[−1, 1]` and reports the largest normalized ratio.
pub fn radial_lemma_check(samples: usize, a: f64, b: f64, seed: u64) -> Result<RadialLemmaReport, AnalysisError> {
    if !(a > 1.0 && a.is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!("a must be > 1, got {a}")));
    }
    if !(b < 1.0) {
        return Err(AnalysisError::InvalidParameter(format!("B must be < 1, got {b}")));
    }
    let mut rng = SplitMix64::new(seed);
    let draws: Vec<[f64; 4]> =
        (0..samples).map(|_| std::array::from_fn(|_| rng.uniform(-1.0, 1.0))).collect();
    let (max_ratio, argmax_r) = draws
        .iter()
        .map(|c| radial_lemma_ratio(c, a, b))
        .fold((0.0, 1.0), |best, cur| if cur.0 > best.0 { cur } else { best });
    Ok(RadialLemmaReport { a, gradient_exponent: b, samples, seed, max_ratio, argmax_r })
}

/// The best constant of the radial inequality
/// `C ∫ u² / (|x|² log^{2−B}(a/|x|)) dx ≤ ∫ log^B(a/|x|) |∇u|² dx`
/// for radial `u` vanishing on the unit circle, estimated from above.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialHardyEstimate {
    pub a: f64,
    pub gradient_exponent: f64,
    pub estimate: f64,
    /// `((1 − B)/2)²`.
    pub reference: f64,
    pub nodes: usize,
    /// Ratio `T / log a` of the truncated range in `t = log(a/r)`.
    pub range_ratio: f64,
}

/// Ratio of the last to the first node in `t`.
const HARDY_RANGE: f64 = 1e16;

/// Smallest eigenvalue of `∫ t^B u'² dt / ∫ t^{B−2} u² dt` on `t > log a`
/// with `u(log a) = 0`, by P1 elements on a geometric grid.
///
/// Beyond the last node the trial functions are continued as constants; their
/// mass there is added in closed form, so the discrete space is a subspace of
/// the admissible one and the estimate is an upper bound of the infimum.
pub fn radial_hardy_estimate(a: f64, b: f64, nodes: usize) -> Result<RadialHardyEstimate, AnalysisError> {
    if !(a > 1.0 && a.is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!("a must be > 1, got {a}")));
    }
    if !(b > -1.0 && b < 1.0) {
        return Err(AnalysisError::InvalidParameter(format!("B must lie in (−1, 1), got {b}")));
    }
    if nodes < 10 {
        return Err(AnalysisError::InvalidParameter(format!("need at least 10 nodes, got {nodes}")));
    }
    let t0 = a.ln();
    let t: Vec<f64> = (0..=nodes).map(|i| t0 * HARDY_RANGE.powf(i as f64 / nodes as f64)).collect();
    // Unknowns are nodes 1..=nodes; index shifted by one.
    let mut k_diag = vec![0.0; nodes];
    let mut k_off = vec![0.0; nodes - 1];
    let mut m_diag = vec![0.0; nodes];
    let mut m_off = vec![0.0; nodes - 1];
    let (gx, gw) = gauss_legendre_unit(12);
    for e in 0..nodes {
        let (lo, hi) = (t[e], t[e + 1]);
        let h = hi - lo;
        let stiff = (hi.powf(b + 1.0) - lo.powf(b + 1.0)) / ((b + 1.0) * h * h);
        let (mut m00, mut m01, mut m11) = (0.0, 0.0, 0.0);
        for (x, w) in gx.iter().zip(&gw) {
            let s = lo + x * h;
            let weight = w * h * s.powf(b - 2.0);
            m00 += weight * (1.0 - x) * (1.0 - x);
            m01 += weight * (1.0 - x) * x;
            m11 += weight * x * x;
        }
        // Local node 0 is global e, node 1 is e + 1; global 0 is constrained.
        if e > 0 {
            k_diag[e - 1] += stiff;
            m_diag[e - 1] += m00;
            k_off[e - 1] -= stiff;
            m_off[e - 1] += m01;
        }
        k_diag[e] += stiff;
        m_diag[e] += m11;
    }
    let last = t[nodes];
    m_diag[nodes - 1] += last.powf(b - 1.0) / (1.0 - b);

    let count_below = |x: f64| {
        let mut count = 0;
        let mut pivot = 1.0;
        for i in 0..nodes {
            let coupling = if i == 0 { 0.0 } else { (k_off[i - 1] - x * m_off[i - 1]).powi(2) / pivot };
            pivot = k_diag[i] - x * m_diag[i] - coupling;
            if pivot == 0.0 {
                pivot = -f64::MIN_POSITIVE;
            }
            if pivot < 0.0 {
                count += 1;
            }
        }
        count
    };
    // The constant trial vector (zero only at the constrained node) gives an upper bracket.
    let upper = {
        let num: f64 = k_diag.iter().sum::<f64>() + 2.0 * k_off.iter().sum::<f64>();
        let den: f64 = m_diag.iter().sum::<f64>() + 2.0 * m_off.iter().sum::<f64>();
        num / den
    };
    let (mut lo, mut hi) = (0.0, upper * (1.0 + 1e-12));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(RadialHardyEstimate {
        a,
        gradient_exponent: b,
        estimate: 0.5 * (lo + hi),
        reference: (0.5 * (1.0 - b)).powi(2),
        nodes,
        range_ratio: HARDY_RANGE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, big_a: f64, b: f64, p: f64) -> WeightParams {
        WeightParams { scale: a, mass_exponent: big_a, gradient_exponent: b, power: p, far_field_exponent: 1.0 }
    }

    #[test]
    fn unit_scale_matches_direct_radial_integrals() {
        // Oracle in the r variable for u = (1 − r)², p = 2, A = 2, B = 0, a = e.
        let a = std::f64::consts::E;
        let tol = Tolerance::relative(1e-12).with_abs(1e-300);
        let energy = 2.0 * PI * integrate_pieces(|r| 4.0 * (1.0 - r).powi(2) * r, &[0.0, 1.0], tol).value;
        // Below ε the profile is 1 to O(ε) and the weight integrates to 1/log(a/ε).
        let eps = 1e-12;
        let body = integrate_pieces(
            |r| (1.0 - r).powi(4) / (r * (a / r).ln().powi(2)),
            &[eps, 1e-8, 1e-4, 1e-2, 0.5, 1.0],
            tol,
        )
        .value;
        let mass = 2.0 * PI * (body + 1.0 / (a / eps).ln());
        let q = scaling_family_quotient(1.0, &params(a, 2.0, 0.0, 2.0)).unwrap();
        assert!((q - energy / mass).abs() < 1e-9 * q, "{q} vs {}", energy / mass);
    }

    #[test]
    fn critical_exponent_is_scale_invariant() {
        for (b, p) in [(0.0, 2.0), (0.5, 4.0), (-0.5, 3.0)] {
            let pr = params(std::f64::consts::E, 0.0, b, p).with_mass_offset(0.0);
            let base = scaling_family_quotient(1.0, &pr).unwrap();
            for s in [0.5, 0.1, 0.02, 1e-4] {
                let q = scaling_family_quotient(s, &pr).unwrap();
                assert!((q - base).abs() < 1e-10 * base, "B={b} p={p} λ={s}: {q} vs {base}");
            }
        }
    }

    #[test]
    fn subcritical_quotient_follows_the_scaling_power() {
        let pr = params(std::f64::consts::E, 0.0, 0.0, 2.0).with_mass_offset(-0.3);
        let unit = scaling_family_quotient(1.0, &pr).unwrap();
        for lambda in [0.02, 1e-3, 1e-5] {
            let ratio = scaling_family_quotient(lambda, &pr).unwrap() / unit;
            // R[u_λ] = λ^{(1−B) − 2(A−1)/p} R[u₁].
            let expected = lambda.powf(1.0 - 2.0 * (pr.mass_exponent - 1.0) / 2.0);
            assert!((ratio - expected).abs() < 1e-10 * expected, "λ = {lambda}: {ratio} vs {expected}");
        }
    }

    #[test]
    fn scale_out_of_range_is_rejected() {
        let pr = WeightParams::default();
        assert!(scaling_family_quotient(0.0, &pr).is_err());
        assert!(scaling_family_quotient(1.5, &pr).is_err());
    }

    #[test]
    fn zero_profile_has_zero_ratio() {
        assert_eq!(radial_lemma_ratio(&[0.0], 2.0, 0.0).0, 0.0);
    }

    #[test]
    fn linear_profile_ratio_matches_closed_form() {
        // u = 1 − r, B = 0, a = e: E = π and the ratio is (1 − r)/√(π(1 − log r)).
        let (ratio, _) = radial_lemma_ratio(&[1.0], std::f64::consts::E, 0.0);
        let expected = lemma_grid()
            .into_iter()
            .map(|r| (1.0 - r) / (PI * (1.0 - r.ln())).sqrt())
            .fold(0.0, f64::max);
        assert!((ratio - expected).abs() < 1e-9, "{ratio} vs {expected}");
        assert!(ratio <= 3.0);
    }

    #[test]
    fn hardy_estimate_is_above_and_near_the_constant() {
        for b in [-0.5, 0.0, 0.5] {
            let e = radial_hardy_estimate(std::f64::consts::E, b, 2000).unwrap();
            assert!(e.estimate >= e.reference && e.estimate < e.reference + 0.05, "{e:?}");
        }
    }
}
