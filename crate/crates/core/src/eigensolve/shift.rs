use super::EigenError;
use crate::assembly::SymmetricOperator;
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::{Mat, Side};

/// Cholesky factorizations of `A − σM` for varying `σ`, sharing one symbolic
/// analysis of the common sparsity pattern.
pub(crate) struct ShiftedPencil<'a> {
    a: &'a SymmetricOperator,
    m: &'a SymmetricOperator,
    symbolic: Option<SymbolicLlt<usize>>,
}

pub(crate) struct Factor {
    llt: Llt<usize, f64>,
    pub(crate) shift: f64,
}

impl<'a> ShiftedPencil<'a> {
    pub(crate) fn new(a: &'a SymmetricOperator, m: &'a SymmetricOperator) -> Result<Self, EigenError> {
        if a.dim() != m.dim() {
            return Err(EigenError::DimensionMismatch);
        }
        Ok(Self { a, m, symbolic: None })
    }

    /// Factors `A − σM`; `Ok(None)` when the matrix is not positive definite.
    pub(crate) fn factor(&mut self, shift: f64) -> Result<Option<Factor>, EigenError> {
        let shifted = SymmetricOperator::combine(&[(1.0, self.a), (-shift, self.m)])
            .map_err(|e| EigenError::Factorization(e.to_string()))?
            .to_faer();
        if self.symbolic.is_none() {
            let symbolic = SymbolicLlt::try_new(shifted.symbolic(), Side::Lower)
                .map_err(|e| EigenError::Factorization(format!("{e:?}")))?;
            self.symbolic = Some(symbolic);
        }
        let symbolic = self.symbolic.clone().expect("symbolic factorization");
        match Llt::try_new_with_symbolic(symbolic, shifted.as_ref(), Side::Lower) {
            Ok(llt) => Ok(Some(Factor { llt, shift })),
            Err(_) => Ok(None),
        }
    }

    /// Largest `σ` (up to `rel` relative bracket width) with `A − σM` positive
    /// definite, starting from a guess. Returns the factor at the bracketed shift
    /// or `None` when no definite shift was found down to `−limit`.
    pub(crate) fn probe_below(&mut self, guess: f64, limit: f64, rel: f64) -> Result<Option<Factor>, EigenError> {
        let mut step = guess.abs().max(1e-2);
        let mut lo = guess;
        let mut hi: Option<f64> = None;
        let mut good = loop {
            if let Some(f) = self.factor(lo)? {
                break f;
            }
            hi = Some(lo);
            lo -= step;
            step *= 4.0;
            if lo < -limit {
                return Ok(None);
            }
        };
        if hi.is_none() {
            // The guess is already definite; walk upward to find a failing shift.
            let mut up = step;
            for _ in 0..40 {
                let trial = good.shift + up;
                match self.factor(trial)? {
                    Some(f) => {
                        good = f;
                        up *= 4.0;
                    }
                    None => {
                        hi = Some(trial);
                        break;
                    }
                }
            }
        }
        let Some(mut hi) = hi else { return Ok(Some(good)) };
        while hi - good.shift > rel * hi.abs().max(good.shift.abs()).max(1e-12) {
            let mid = 0.5 * (good.shift + hi);
            match self.factor(mid)? {
                Some(f) => good = f,
                None => hi = mid,
            }
        }
        Ok(Some(good))
    }
}

impl Factor {
    /// Solves `(A − σM) X = B` in place for the columns of `block`.
    pub(crate) fn solve_block(&self, block: &mut [Vec<f64>]) {
        let n = block.first().map_or(0, Vec::len);
        let mut rhs = Mat::<f64>::from_fn(n, block.len(), |i, j| block[j][i]);
        self.llt.solve_in_place(rhs.as_mut());
        for (j, col) in block.iter_mut().enumerate() {
            for (i, x) in col.iter_mut().enumerate() {
                *x = rhs[(i, j)];
            }
        }
    }
}
