use crate::quadrature::{integrate, integrate_pieces, Integral, RadialWeight, Tolerance};
use std::f64::consts::PI;

/// Angular measure of the circle `|y| = s` inside the ball `B_r(c)` with `|c| = d`,
/// for `|d − r| ≤ s ≤ d + r`.
///
/// Uses the half-angle form of the law of cosines, which stays accurate for
/// balls that are small compared with their distance from the origin.
pub(crate) fn arc_measure(s: f64, d: f64, r: f64) -> f64 {
    arc_measure_offsets(d + r - s, s - (d - r), s, d, r)
}

/// Same as [`arc_measure`] with the two vanishing factors `d + r − s` and
/// `s − (d − r)` supplied by the caller, who can often form them without cancellation.
fn arc_measure_offsets(to_far: f64, from_near: f64, s: f64, d: f64, r: f64) -> f64 {
    let num = (to_far * from_near).max(0.0);
    let den = (s + d + r) * (s + d - r);
    4.0 * (num / den).sqrt().atan()
}

fn log_breaks(lo: f64, hi: f64, kinks: &[f64]) -> Vec<f64> {
    let (ul, uh) = (lo.ln(), hi.ln());
    let n = (uh - ul).ceil().max(1.0) as usize;
    let mut breaks: Vec<f64> = (0..=n).map(|i| ul + (uh - ul) * i as f64 / n as f64).collect();
    breaks.extend(kinks.iter().filter(|&&k| k > lo && k < hi).map(|k| k.ln()));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

/// `∫_{B_r(c)} w(|y|) dy` for a radial weight and a ball at distance `d = |c|`
/// from the origin.
///
/// The integral is reduced to the origin-centred radial integral
/// `∫ w(s) s Θ(s) ds` with the exact arc measure `Θ`; the part of the ball
/// containing a full circle around the origin uses the closed-form disk mass.
/// The unit circle is treated as a breakpoint because the extended weights
/// change formula there.
pub fn ball_integral<W: RadialWeight + ?Sized>(weight: &W, d: f64, r: f64) -> Integral {
    let tol = Tolerance { rel: 1e-11, abs: 1e-300, max_intervals: 4000 };
    let mut value = 0.0;
    let mut error = 0.0;
    if d < r {
        value += 2.0 * PI * weight.disk_mass(r - d);
    }
    if d == 0.0 {
        return Integral { value, error };
    }
    let hi = d + r;
    let mut lo = (d - r).abs();
    if lo == 0.0 {
        // The ball boundary passes through the origin and Θ(s) → π as s → 0:
        // split off π · (disk mass) and integrate the bounded remainder.
        // The remainder is O(s/d) times the weight, so cutting it off at
        // 1e-30 · s0 drops less than 1e-30 of the disk mass.
        let s0 = 0.25 * hi;
        let rest = integrate(|s| weight.value(s) * s * (arc_measure(s, d, r) - PI), 1e-30 * s0, s0, tol);
        value += PI * weight.disk_mass(s0) + rest.value;
        error += rest.error;
        lo = s0;
    }
    // The lens only needs accuracy relative to the whole ball integral.
    let tol = tol.with_abs(1e-13 * value).with_abs_floor(1e-300);
    let lens = if hi < 4.0 * lo {
        // Thin shell: s = lo + (width/2)(1 − cos φ) removes the square-root
        // behaviour of Θ at both ends and keeps the offsets exact.
        let width = hi - lo;
        let shift = lo - (d - r);
        let mut breaks = vec![0.0, PI];
        if lo < 1.0 && 1.0 < hi {
            breaks.insert(1, (1.0 - 2.0 * (1.0 - lo) / width).clamp(-1.0, 1.0).acos());
        }
        integrate_pieces(
            |phi| {
                let x = 0.5 * width * (1.0 - phi.cos());
                let s = lo + x;
                let to_far = 0.5 * width * (1.0 + phi.cos());
                let jac = 0.5 * width * phi.sin();
                weight.value(s) * s * arc_measure_offsets(to_far, x + shift, s, d, r) * jac
            },
            &breaks,
            tol,
        )
    } else {
        integrate_pieces(
            |u| {
                let s = u.exp();
                weight.value(s) * s * s * arc_measure(s, d, r)
            },
            &log_breaks(lo, hi, &[1.0]),
            tol,
        )
    };
    Integral { value: value + lens.value, error: error + lens.error }
}
