use super::shift::{Factor, ShiftedPencil};
use super::{dot, norm2, EigResult, EigenError};
use crate::assembly::{ConstraintVector, SymmetricOperator};
use crate::rng::SplitMix64;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

/// Stopping rule and subspace size for the block inverse iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigOptions {
    /// Relative tolerance on the change of the Rayleigh quotient per iteration.
    pub tol: f64,
    /// Tolerance on the relative residual, checked together with `tol`.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Number of vectors iterated together; covers clustered or repeated eigenvalues.
    pub block: usize,
    /// Seed for the starting block.
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self { tol: 1e-10, residual_tol: 1e-8, max_iter: 500, block: 8, seed: 0x5EED }
    }
}

impl EigOptions {
    fn validate(&self) -> Result<(), EigenError> {
        if !(self.tol > 0.0 && self.residual_tol > 0.0 && self.max_iter > 0 && self.block > 0) {
            return Err(EigenError::InvalidParameter(format!("invalid solver options {self:?}")));
        }
        Ok(())
    }
}

/// Negative shift used for the Neumann pencil, which is singular at `σ = 0`.
const NEUMANN_SHIFT: f64 = -1e-2;
/// Bisection steps spent sharpening a probed shift.
const PROBE_REL: f64 = 1e-2;
const PROBE_LIMIT: f64 = 1e200;

/// Removes the constant component in the `M`-inner product, using `w = M·1`.
struct ConstantDeflation<'a> {
    w: &'a [f64],
    total: f64,
}

impl ConstantDeflation<'_> {
    fn apply(&self, v: &mut [f64]) {
        let c = dot(self.w, v) / self.total;
        for x in v.iter_mut() {
            *x -= c;
        }
    }
}

/// Two passes of modified Gram–Schmidt in the `M`-inner product; vectors that
/// collapse are replaced by fresh random ones.
fn m_orthonormalize(
    vectors: &mut [Vec<f64>],
    m: &SymmetricOperator,
    deflation: Option<&ConstantDeflation>,
    rng: &mut SplitMix64,
) {
    for j in 0..vectors.len() {
        for attempt in 0..4 {
            if attempt > 0 {
                for x in vectors[j].iter_mut() {
                    *x = rng.uniform(-1.0, 1.0);
                }
                if let Some(d) = deflation {
                    d.apply(&mut vectors[j]);
                }
            }
            let before = m.quadratic_form(&vectors[j]).max(0.0).sqrt();
            for _ in 0..2 {
                let mv = m.apply(&vectors[j]);
                for i in 0..j {
                    let c = dot(&vectors[i], &mv);
                    let (head, tail) = vectors.split_at_mut(j);
                    for (x, y) in tail[0].iter_mut().zip(&head[i]) {
                        *x -= c * y;
                    }
                }
            }
            let after = m.quadratic_form(&vectors[j]).max(0.0).sqrt();
            if after > 1e-10 * before && after > 0.0 {
                for x in vectors[j].iter_mut() {
                    *x /= after;
                }
                break;
            }
        }
    }
}

/// Rayleigh–Ritz on an `M`-orthonormal block: returns ascending Ritz values
/// and replaces the block by the Ritz vectors.
fn rayleigh_ritz(vectors: &mut Vec<Vec<f64>>, a: &SymmetricOperator) -> Result<Vec<f64>, EigenError> {
    let p = vectors.len();
    let av: Vec<Vec<f64>> = vectors.iter().map(|v| a.apply(v)).collect();
    let h = Mat::<f64>::from_fn(p, p, |i, j| 0.5 * (dot(&vectors[i], &av[j]) + dot(&vectors[j], &av[i])));
    let eig = h.self_adjoint_eigen(Side::Lower).map_err(|e| EigenError::Factorization(format!("{e:?}")))?;
    let values: Vec<f64> = (0..p).map(|k| eig.S()[k]).collect();
    let u = eig.U();
    let n = vectors[0].len();
    let rotated: Vec<Vec<f64>> = (0..p)
        .map(|k| {
            let mut out = vec![0.0; n];
            for (i, v) in vectors.iter().enumerate() {
                let c = u[(i, k)];
                for (o, x) in out.iter_mut().zip(v) {
                    *o += c * x;
                }
            }
            out
        })
        .collect();
    *vectors = rotated;
    Ok(values)
}

fn residual(a: &SymmetricOperator, m: &SymmetricOperator, u: &[f64], lambda: f64, scale_shift: f64) -> f64 {
    let au = a.apply(u);
    let mu = m.apply(u);
    let r: Vec<f64> = au.iter().zip(&mu).map(|(x, y)| x - lambda * y).collect();
    let den = norm2(&au) + (lambda.abs() + scale_shift.abs()) * norm2(&mu);
    if den == 0.0 {
        0.0
    } else {
        norm2(&r) / den
    }
}

/// `M`-normalized, with the largest-magnitude coefficient positive.
fn normalize_sign(u: &mut [f64], m: &SymmetricOperator) {
    let norm = m.quadratic_form(u).max(0.0).sqrt();
    let pivot = u.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
    let s = if pivot < 0.0 { -1.0 / norm } else { 1.0 / norm };
    for x in u.iter_mut() {
        *x *= s;
    }
}

/// Block inverse iteration with `(A − σM)⁻¹ M` and Rayleigh–Ritz, converging to
/// the smallest eigenvalues above the shift.
fn inverse_subspace(
    a: &SymmetricOperator,
    m: &SymmetricOperator,
    factor: &Factor,
    opts: &EigOptions,
    deflation: Option<&ConstantDeflation>,
) -> Result<EigResult, EigenError> {
    let n = a.dim();
    let available = if deflation.is_some() { n.saturating_sub(1) } else { n };
    let p = opts.block.min(available).max(1);
    let mut rng = SplitMix64::new(opts.seed);
    let mut vectors: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect();
    if let Some(d) = deflation {
        vectors.iter_mut().for_each(|v| d.apply(v));
    }
    m_orthonormalize(&mut vectors, m, deflation, &mut rng);
    let mut history = Vec::new();
    let mut previous = f64::NAN;
    let mut values = vec![f64::NAN; p];
    let mut res = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for k in 1..=opts.max_iter {
        iterations = k;
        let mut block: Vec<Vec<f64>> = vectors.iter().map(|v| m.apply(v)).collect();
        factor.solve_block(&mut block);
        if let Some(d) = deflation {
            block.iter_mut().for_each(|v| d.apply(v));
        }
        m_orthonormalize(&mut block, m, deflation, &mut rng);
        values = rayleigh_ritz(&mut block, a)?;
        vectors = block;
        let lambda = values[0];
        history.push(lambda);
        res = residual(a, m, &vectors[0], lambda, if deflation.is_some() { 0.0 } else { factor.shift });
        let increment_ok = (lambda - previous).abs() <= opts.tol * (lambda.abs() + factor.shift.abs());
        previous = lambda;
        if increment_ok && res <= opts.residual_tol {
            converged = true;
            break;
        }
    }
    let mut u = vectors.swap_remove(0);
    normalize_sign(&mut u, m);
    Ok(EigResult {
        lambda: values[0],
        coefficients: u,
        residual_norm: res,
        iterations,
        constraint_violation: 0.0,
        history,
        converged,
        next_lambda: values.get(1).copied(),
        unbounded: false,
    })
}

/// Smallest eigenvalue of `(K, M_w)` on `{u : wᵀu = 0}` with `w = M_w·1`.
///
/// Iterates with a fixed negative shift (the Neumann pencil is singular at
/// zero) and removes the constant mode from every iterate.
pub fn second_neumann_eigen(
    stiffness: &SymmetricOperator,
    mass: &SymmetricOperator,
    constraint: &ConstraintVector,
    opts: &EigOptions,
) -> Result<EigResult, EigenError> {
    opts.validate()?;
    let n = stiffness.dim();
    if mass.dim() != n || constraint.0.len() != n {
        return Err(EigenError::DimensionMismatch);
    }
    if n < 2 {
        return Err(EigenError::InvalidParameter("need at least two degrees of freedom".into()));
    }
    let total: f64 = constraint.0.iter().sum();
    let deflation = ConstantDeflation { w: &constraint.0, total };
    let mut pencil = ShiftedPencil::new(stiffness, mass)?;
    let factor = pencil
        .factor(NEUMANN_SHIFT)?
        .ok_or_else(|| EigenError::Factorization("shifted Neumann matrix is not positive definite".into()))?;
    let mut result = inverse_subspace(stiffness, mass, &factor, opts, Some(&deflation))?;
    let u = &result.coefficients;
    result.constraint_violation = constraint.apply(u).abs() / (constraint.norm() * norm2(u));
    let ku = stiffness.apply(u);
    let mu = mass.apply(u);
    let r: Vec<f64> = ku.iter().zip(&mu).map(|(x, y)| x - result.lambda * y).collect();
    result.residual_norm = norm2(&r) / norm2(&ku);
    Ok(result)
}

/// Smallest eigenvalue of `(A, M)` for symmetric `A` and positive definite `M`,
/// with the shift found by Cholesky probing.
fn smallest_eigen(a: &SymmetricOperator, m: &SymmetricOperator, opts: &EigOptions) -> Result<EigResult, EigenError> {
    opts.validate()?;
    if a.dim() != m.dim() {
        return Err(EigenError::DimensionMismatch);
    }
    let mut pencil = ShiftedPencil::new(a, m)?;
    let Some(factor) = pencil.probe_below(-1e-2, PROBE_LIMIT, PROBE_REL)? else {
        return Ok(EigResult {
            lambda: f64::NEG_INFINITY,
            coefficients: vec![0.0; a.dim()],
            residual_norm: f64::NAN,
            iterations: 0,
            constraint_violation: 0.0,
            history: vec![],
            converged: false,
            next_lambda: None,
            unbounded: true,
        });
    };
    inverse_subspace(a, m, &factor, opts, None)
}

/// Smallest eigenvalue of `(K + B_β, M_w)`; may be negative.
pub fn robin_first_eigen(
    stiffness: &SymmetricOperator,
    boundary: &SymmetricOperator,
    mass: &SymmetricOperator,
    opts: &EigOptions,
) -> Result<EigResult, EigenError> {
    if stiffness.dim() != boundary.dim() {
        return Err(EigenError::DimensionMismatch);
    }
    let a = SymmetricOperator::combine(&[(1.0, stiffness), (1.0, boundary)]).map_err(|_| EigenError::DimensionMismatch)?;
    smallest_eigen(&a, mass, opts)
}

/// Largest eigenvalue of `(A, M₀)` with `A` possibly indefinite, computed as
/// minus the smallest eigenvalue of `(−A, M₀)`. An unbracketable maximum is
/// reported as `+∞` with `unbounded` set.
pub fn pencil_max_eigen(a: &SymmetricOperator, plain_mass: &SymmetricOperator, opts: &EigOptions) -> Result<EigResult, EigenError> {
    let negated = SymmetricOperator::combine(&[(-1.0, a)]).map_err(|_| EigenError::DimensionMismatch)?;
    let mut result = smallest_eigen(&negated, plain_mass, opts)?;
    result.lambda = -result.lambda;
    result.next_lambda = result.next_lambda.map(|x| -x);
    result.history.iter_mut().for_each(|x| *x = -*x);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{boundary_mass, constraint_vector, hardy_mass, plain_mass, stiffness, BetaSpec};
    use crate::geometry::{build_mesh, DomainSpec, Mesh};
    use faer::linalg::solvers::DenseSolveCore;

    fn mesh() -> Mesh {
        build_mesh(&DomainSpec::Disk { radius: 1.0 }, 0.25, 0.5, 6).unwrap()
    }

    /// Dense oracle: eigenvalues of `L⁻¹ A L⁻ᵀ` with `M = L Lᵀ`.
    fn dense_eigenvalues(a: &SymmetricOperator, m: &SymmetricOperator) -> Vec<f64> {
        let n = a.dim();
        let (ad, md) = (a.to_dense(), m.to_dense());
        let mm = Mat::<f64>::from_fn(n, n, |i, j| md[i][j]);
        let llt = mm.llt(Side::Lower).unwrap();
        let l = llt.L();
        let linv = l.to_owned().as_ref().partial_piv_lu().inverse();
        let am = Mat::<f64>::from_fn(n, n, |i, j| ad[i][j]);
        let c = &linv * &am * linv.transpose();
        let c = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
        c.self_adjoint_eigenvalues(Side::Lower).unwrap()
    }

    #[test]
    fn neumann_matches_dense_constrained_oracle() {
        let mesh = mesh();
        let a = 1.5;
        let k = stiffness(&mesh).unwrap();
        let m = hardy_mass(&mesh, a).unwrap();
        let w = constraint_vector(&mesh, a).unwrap();
        let result = second_neumann_eigen(&k, &m, &w, &EigOptions::default()).unwrap();
        assert!(result.converged);
        // The unconstrained spectrum is {0} ∪ constrained spectrum, since the
        // constant mode is M-orthogonal to the constraint space.
        let dense = dense_eigenvalues(&k, &m);
        assert!(dense[0].abs() < 1e-10);
        assert!((result.lambda - dense[1]).abs() < 1e-9 * dense[1], "{} vs {}", result.lambda, dense[1]);
        assert!(result.constraint_violation < 1e-12);
        assert!((m.quadratic_form(&result.coefficients) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn robin_with_zero_beta_gives_constants() {
        let mesh = mesh();
        let k = stiffness(&mesh).unwrap();
        let m = hardy_mass(&mesh, 2.0).unwrap();
        let b = boundary_mass(&mesh, &BetaSpec::Constant { value: 0.0 }).unwrap();
        let result = robin_first_eigen(&k, &b, &m, &EigOptions::default()).unwrap();
        assert!(result.lambda.abs() < 1e-9, "{}", result.lambda);
        let u = &result.coefficients;
        let spread = u.iter().fold(0.0f64, |s, x| s.max((x - u[0]).abs()));
        assert!(spread < 1e-6 * u[0].abs());
    }

    #[test]
    fn robin_and_pencil_match_dense_oracle() {
        let mesh = mesh();
        let k = stiffness(&mesh).unwrap();
        let m = hardy_mass(&mesh, 2.0).unwrap();
        let m0 = plain_mass(&mesh).unwrap();
        let b = boundary_mass(&mesh, &BetaSpec::Constant { value: -1.0 }).unwrap();
        let robin = robin_first_eigen(&k, &b, &m, &EigOptions::default()).unwrap();
        let kb = SymmetricOperator::combine(&[(1.0, &k), (1.0, &b)]).unwrap();
        let dense = dense_eigenvalues(&kb, &m);
        assert!((robin.lambda - dense[0]).abs() < 1e-9 * dense[0].abs());
        assert!(robin.lambda < 0.0);

        let a = SymmetricOperator::combine(&[(1.0, &m), (-4.5, &k)]).unwrap();
        let pencil = pencil_max_eigen(&a, &m0, &EigOptions::default()).unwrap();
        let dense = dense_eigenvalues(&a, &m0);
        let top = dense[dense.len() - 1];
        assert!((pencil.lambda - top).abs() < 1e-8 * top.abs(), "{} vs {top}", pencil.lambda);
    }
}
