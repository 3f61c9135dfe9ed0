//! Globally adaptive Gauss–Kronrod (7/15) integration on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Value of an integral together with its estimated absolute error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Stopping rule for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel: 1e-12, abs: 0.0, max_intervals: 2000 }
    }
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self { rel, ..Self::default() }
    }

    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = abs;
        self
    }

    pub fn with_abs_floor(mut self, floor: f64) -> Self {
        self.abs = self.abs.max(floor);
        self
    }
}

struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Piece {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Piece { lo, hi, value: k * h, error: ((k - g) * h).abs() }
}

/// Integrates `f` over the union of consecutive intervals `[breaks[i], breaks[i+1]]`.
///
/// Breakpoints let callers isolate kinks and endpoint singularities; interior
/// nodes never touch the breakpoints themselves.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: Tolerance) -> Integral {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod(&f, w[0], w[1]));
        }
    }
    if heap.is_empty() {
        return Integral { value: 0.0, error: 0.0 };
    }
    let mut value: f64 = heap.iter().map(|p| p.value).sum();
    let mut error: f64 = heap.iter().map(|p| p.error).sum();
    loop {
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target || heap.len() >= tol.max_intervals {
            // Re-sum to drop drift from the running totals.
            let value = heap.iter().map(|p| p.value).sum();
            let error = heap.iter().map(|p| p.error).sum();
            return Integral { value, error };
        }
        let worst = heap.pop().expect("non-empty heap");
        if worst.error == 0.0 {
            // Every interval is exhausted; the running error is only drift.
            heap.push(worst);
            error = 0.0;
            continue;
        }
        if worst.error.is_nan() {
            heap.push(worst);
            let value = heap.iter().map(|p| p.value).sum();
            return Integral { value, error: f64::NAN };
        }
        value -= worst.value;
        error -= worst.error;
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval exhausted in floating point; keep it and stop refining it.
            value += worst.value;
            heap.push(Piece { error: 0.0, ..worst });
            continue;
        }
        for piece in [kronrod(&f, worst.lo, mid), kronrod(&f, mid, worst.hi)] {
            value += piece.value;
            error += piece.error;
            heap.push(piece);
        }
    }
}

/// Integrates `f` over `[lo, hi]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Integral {
    integrate_pieces(f, &[lo, hi], tol)
}

/// Integrates over `[lo, hi]` with `0 < lo` in the variable `u = log s`, which
/// resolves integrands varying on a logarithmic scale.
pub fn integrate_log<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Integral {
    debug_assert!(lo > 0.0);
    let (ul, uh) = (lo.ln(), hi.ln());
    let n = ((uh - ul) / 2.0).ceil().max(1.0) as usize;
    let breaks: Vec<f64> = (0..=n).map(|i| ul + (uh - ul) * i as f64 / n as f64).collect();
    integrate_pieces(
        |u| {
            let s = u.exp();
            f(s) * s
        },
        &breaks,
        tol,
    )
}
