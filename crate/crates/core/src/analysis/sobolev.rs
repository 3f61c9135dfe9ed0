use super::AnalysisError;
use crate::assembly::{plain_mass, weighted_stiffness, SymmetricOperator, WeightedRule};
use crate::eigensolve::ShiftedPencil;
use crate::geometry::{build_mesh, BoundaryTag, DomainSpec, Mesh};
use crate::weights::{SingularLogWeight, WeightParams};
use serde::{Deserialize, Serialize};

/// Stopping rule of the descent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescentOptions {
    pub max_iter: usize,
    /// Stop when the decrease predicted along the search direction falls
    /// below `tol` times the quotient.
    pub tol: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { max_iter: 1000, tol: 1e-10 }
    }
}

/// Golden-section steps after bracketing the line minimum.
const GOLDEN_STEPS: usize = 60;

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Upper estimate of the best constant of the weighted Sobolev inequality on
/// the finite-element space of a mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevEstimate {
    pub params: WeightParams,
    pub c_estimate: f64,
    /// Quotient after every accepted step, starting with the initial guess.
    pub history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub dirichlet: bool,
    /// Number of unknowns after removing Dirichlet vertices.
    pub dofs: usize,
    /// Vertex values of the final iterate, scaled to unit weighted p-norm.
    #[serde(skip)]
    pub coefficients: Vec<f64>,
}

/// The quotient `uᵀK_B u / (Σ_k c_k |u(x_k)|^p)^{2/p}` on the free vertices.
struct Quotient<'a> {
    stiffness: SymmetricOperator,
    rule: &'a WeightedRule,
    free: Vec<usize>,
    dim: usize,
    power: f64,
}

impl Quotient<'_> {
    fn expand(&self, v: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.dim];
        for (&i, &x) in self.free.iter().zip(v) {
            u[i] = x;
        }
        u
    }

    fn norm_p(&self, v: &[f64]) -> f64 {
        let p = self.power;
        self.rule.integrate(&self.expand(v), |s| s.abs().powf(p))
    }

    fn value(&self, v: &[f64]) -> f64 {
        self.stiffness.quadratic_form(v) / self.norm_p(v).powf(2.0 / self.power)
    }

    /// Gradient at a point with unit p-norm, where the quotient equals `r`.
    fn gradient(&self, v: &[f64], r: f64) -> Vec<f64> {
        let p = self.power;
        let dn = self.rule.integrate_gradient(&self.expand(v), |s| s.abs().powf(p - 2.0) * s);
        let kv = self.stiffness.apply(v);
        self.free.iter().zip(kv).map(|(&i, k)| 2.0 * (k - r * dn[i])).collect()
    }

    fn normalize(&self, v: &mut [f64]) {
        let scale = self.norm_p(v).powf(-1.0 / self.power);
        v.iter_mut().for_each(|x| *x *= scale);
    }
}

/// The quotient along `v + t d`, from values cached at the quadrature points.
struct Line<'a> {
    weights: &'a WeightedRule,
    at_v: Vec<f64>,
    at_d: Vec<f64>,
    energy: [f64; 3],
    power: f64,
}

impl<'a> Line<'a> {
    fn new(q: &'a Quotient<'_>, v: &[f64], d: &[f64]) -> Self {
        let kd = q.stiffness.apply(d);
        Self {
            weights: q.rule,
            at_v: q.rule.values(&q.expand(v)),
            at_d: q.rule.values(&q.expand(d)),
            energy: [q.stiffness.quadratic_form(v), dot(v, &kd), dot(d, &kd)],
            power: q.power,
        }
    }

    fn value(&self, t: f64) -> f64 {
        let p = self.power;
        let norm: f64 = (0..self.at_v.len())
            .map(|k| self.weights.weight(k) * (self.at_v[k] + t * self.at_d[k]).abs().powf(p))
            .sum();
        (self.energy[0] + 2.0 * t * self.energy[1] + t * t * self.energy[2]) / norm.powf(2.0 / p)
    }

    /// Brackets a decrease below `start` from the guess, then refines by golden section.
    fn minimize(&self, start: f64, guess: f64) -> Option<f64> {
        let mut mid = guess;
        let mut f_mid = self.value(mid);
        let mut shrink = 0;
        while !(f_mid < start) {
            shrink += 1;
            if shrink > 60 {
                return None;
            }
            mid *= 0.25;
            f_mid = self.value(mid);
        }
        let mut lo = if shrink > 0 { 0.0 } else { 0.5 * mid };
        let mut hi = 2.0 * mid;
        let mut f_hi = self.value(hi);
        while f_hi < f_mid && hi < 1e12 {
            lo = mid;
            mid = hi;
            f_mid = f_hi;
            hi *= 2.0;
            f_hi = self.value(hi);
        }
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - ratio * (b - a);
        let mut x2 = a + ratio * (b - a);
        let (mut f1, mut f2) = (self.value(x1), self.value(x2));
        for _ in 0..GOLDEN_STEPS {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - ratio * (b - a);
                f1 = self.value(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + ratio * (b - a);
                f2 = self.value(x2);
            }
        }
        let (best, f_best) = [(x1, f1), (x2, f2), (mid, f_mid)]
            .into_iter()
            .fold((mid, f_mid), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        (f_best < start).then_some(best)
    }
}

/// Minimizes the weighted Sobolev quotient
/// `∫ log^B(a/|x|) |∇u|² dx / (∫ |u|^p / (|x|² log^A(a/|x|)) dx)^{2/p}`
/// over P1 functions, vanishing on the outer and artificial boundary when
/// `dirichlet` is set.
///
/// Descent in the energy inner product: the gradient is mapped through the
/// inverse of the weighted stiffness and combined with the previous direction
/// (Polak–Ribière, restarted when it is not a descent direction). The step
/// minimizes the quotient along the line and the iterate is rescaled to unit p-norm after every step. For `p = 2`
/// this is a Rayleigh quotient minimization.
pub fn sobolev_constant_estimate(
    mesh: &Mesh,
    params: &WeightParams,
    dirichlet: bool,
    opts: &DescentOptions,
) -> Result<SobolevEstimate, AnalysisError> {
    params.validate()?;
    if params.mass_exponent <= 1.0 {
        return Err(AnalysisError::InvalidParameter(format!(
            "A must be > 1 for the weight to be integrable at the origin, got {}",
            params.mass_exponent
        )));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(AnalysisError::InvalidParameter("descent needs tol > 0 and max_iter ≥ 1".into()));
    }
    let n = mesh.num_vertices();
    let fixed = if dirichlet {
        mesh.boundary_vertices_tagged(&[BoundaryTag::Outer, BoundaryTag::Artificial])
    } else {
        Vec::new()
    };
    let mut is_fixed = vec![false; n];
    fixed.iter().for_each(|&i| is_fixed[i] = true);
    let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
    if free.is_empty() {
        return Err(AnalysisError::InvalidParameter("no free vertices".into()));
    }

    let k = weighted_stiffness(mesh, params.scale, params.gradient_exponent)?.restrict(&free);
    let m0 = plain_mass(mesh)?.restrict(&free);
    let rule = WeightedRule::new(mesh, &SingularLogWeight { scale: params.scale, exponent: params.mass_exponent })?;
    // Without boundary conditions the stiffness is singular; a tiny mass shift keeps it definite.
    let shift = if dirichlet { 0.0 } else { -1e-8 * k.diagonal().iter().sum::<f64>() / m0.diagonal().iter().sum::<f64>() };
    let mut pencil = ShiftedPencil::new(&k, &m0)?;
    let precond = pencil
        .factor(shift)?
        .ok_or_else(|| AnalysisError::InvalidParameter("weighted stiffness is not definite on the free vertices".into()))?;

    let quotient = Quotient { stiffness: k, rule: &rule, free, dim: n, power: params.power };
    let r_out = mesh.vertices.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let mut v: Vec<f64> = quotient.free.iter().map(|&i| 1.0 - mesh.vertices[i].norm() / r_out).collect();
    quotient.normalize(&mut v);
    let mut r = quotient.value(&v);
    let mut history = vec![r];
    let mut step = 1.0_f64;
    let mut converged = false;
    let mut iterations = 0;
    let mut previous: Option<(Vec<f64>, Vec<f64>, Vec<f64>)> = None;
    while iterations < opts.max_iter {
        let g = quotient.gradient(&v, r);
        let mut z = vec![g.clone()];
        precond.solve_block(&mut z);
        let z = z.pop().expect("one column");
        let gz = dot(&g, &z);
        if gz <= opts.tol * r {
            converged = true;
            break;
        }
        // Polak–Ribière with restart, in the preconditioned metric.
        let mut d: Vec<f64> = z.iter().map(|x| -x).collect();
        if let Some((g_old, z_old, d_old)) = &previous {
            let beta = ((gz - dot(&z, g_old)) / dot(&g_old, &z_old)).max(0.0);
            let cg: Vec<f64> = d.iter().zip(d_old).map(|(x, y)| x + beta * y).collect();
            if dot(&g, &cg) < 0.0 {
                d = cg;
            }
        }
        let line = Line::new(&quotient, &v, &d);
        let Some(t) = line.minimize(r, step) else { break };
        step = t;
        let mut next: Vec<f64> = v.iter().zip(&d).map(|(x, y)| x + t * y).collect();
        quotient.normalize(&mut next);
        let value = quotient.value(&next);
        if value > r {
            break;
        }
        v = next;
        r = value;
        history.push(r);
        iterations += 1;
        previous = Some((g, z, d));
    }
    Ok(SobolevEstimate {
        params: *params,
        c_estimate: r,
        history,
        converged,
        iterations,
        dirichlet,
        dofs: quotient.free.len(),
        coefficients: quotient.expand(&v),
    })
}

/// Mesh resolution shared by the half-domain and full-domain runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshResolution {
    pub target_h: f64,
    pub grading_q: f64,
    pub rings: usize,
}

/// Comparison of the constant on `B_r ∩ {x₂ > h(x₁)}` with the full disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfDomainReport {
    pub h_coeffs: Vec<f64>,
    pub r: f64,
    pub params: WeightParams,
    pub epsilon: f64,
    /// `max |h'|` on `(−r, r)`.
    pub max_slope: f64,
    pub half_estimate: f64,
    pub full_estimate: f64,
    /// `2^{2/p − 1} · full_estimate / (1 + ε)`.
    pub threshold: f64,
    /// `half_estimate − threshold`.
    pub margin: f64,
    pub pass: bool,
    pub converged: bool,
}

fn max_slope(h_coeffs: &[f64], r: f64) -> f64 {
    let n = 2001;
    (0..n)
        .map(|i| {
            let x = -r + 2.0 * r * i as f64 / (n - 1) as f64;
            h_coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c * x.powi(k as i32 - 1)).sum::<f64>().abs()
        })
        .fold(0.0, f64::max)
}

/// Runs the Sobolev estimate on the domain above the graph of `h` in `B_r`,
/// with the graph part of the boundary free, and on the disk `B_r`, and
/// compares the first with `2^{2/p−1}` times the second over `1 + ε`.
pub fn half_domain_inequality_check(
    h_coeffs: &[f64],
    r: f64,
    params: &WeightParams,
    epsilon: f64,
    resolution: &MeshResolution,
    opts: &DescentOptions,
) -> Result<HalfDomainReport, AnalysisError> {
    if !(epsilon >= 0.0) {
        return Err(AnalysisError::InvalidParameter(format!("epsilon must be ≥ 0, got {epsilon}")));
    }
    let build = |spec: DomainSpec| build_mesh(&spec, resolution.target_h, resolution.grading_q, resolution.rings);
    let half_mesh = build(DomainSpec::HalfGraph { h_coeffs: h_coeffs.to_vec(), r })?;
    let full_mesh = build(DomainSpec::Disk { radius: r })?;
    let half = sobolev_constant_estimate(&half_mesh, params, true, opts)?;
    let full = sobolev_constant_estimate(&full_mesh, params, true, opts)?;
    let threshold = 2f64.powf(2.0 / params.power - 1.0) * full.c_estimate / (1.0 + epsilon);
    let margin = half.c_estimate - threshold;
    Ok(HalfDomainReport {
        h_coeffs: h_coeffs.to_vec(),
        r,
        params: *params,
        epsilon,
        max_slope: max_slope(h_coeffs, r),
        half_estimate: half.c_estimate,
        full_estimate: full.c_estimate,
        threshold,
        margin,
        pass: margin >= 0.0,
        converged: half.converged && full.converged,
    })
}
