use super::AssemblyError;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Which bilinear form an operator discretizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Stiffness,
    WeightedStiffness,
    HardyMass,
    PlainMass,
    BoundaryMass,
    /// Linear combination or restriction of other operators.
    Combined,
}

/// Sparse symmetric matrix in compressed-row form with both triangles stored.
///
/// Rows are sorted by column; duplicate entries from assembly are summed in
/// element order, so the result is deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricOperator {
    kind: OperatorKind,
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetricOperator {
    /// Builds the operator from `(row, col, value)` entries. Each off-diagonal
    /// contribution must be supplied for both `(i, j)` and `(j, i)`.
    pub(crate) fn from_entries(kind: OperatorKind, dim: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; dim + 1];
        for &(i, _, _) in entries {
            counts[i + 1] += 1;
        }
        for i in 0..dim {
            counts[i + 1] += counts[i];
        }
        // Bucket by row keeping the input order, then sort each row by column.
        let mut order = vec![0usize; entries.len()];
        let mut next = counts.clone();
        for (e, &(i, _, _)) in entries.iter().enumerate() {
            order[next[i]] = e;
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            let row = &mut order[counts[i]..counts[i + 1]];
            row.sort_by_key(|&e| entries[e].1);
            for &e in row.iter() {
                let (_, j, v) = entries[e];
                if col_idx.len() > row_ptr[i] && *col_idx.last().expect("non-empty") == j {
                    *values.last_mut().expect("non-empty") += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { kind, dim, row_ptr, col_idx, values }
    }

    pub fn with_kind(self, kind: OperatorKind) -> Self {
        Self { kind, ..self }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim, "vector length does not match operator");
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "vector length does not match operator");
        (0..self.dim).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// Largest `|A_ij − A_ji|` over stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        (0..self.dim)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// `Σ c_k A_k` over operators of the same dimension.
    pub fn combine(terms: &[(f64, &SymmetricOperator)]) -> Result<Self, AssemblyError> {
        let dim = terms.first().map_or(0, |(_, op)| op.dim);
        if terms.iter().any(|(_, op)| op.dim != dim) {
            return Err(AssemblyError::DimensionMismatch);
        }
        let entries: Vec<(usize, usize, f64)> = terms
            .iter()
            .flat_map(|&(c, op)| (0..dim).flat_map(move |i| op.row(i).map(move |(j, v)| (i, j, c * v))))
            .collect();
        Ok(Self::from_entries(OperatorKind::Combined, dim, &entries))
    }

    /// Principal submatrix on the listed (sorted, distinct) indices.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut position = vec![usize::MAX; self.dim];
        for (k, &i) in keep.iter().enumerate() {
            position[i] = k;
        }
        let entries: Vec<(usize, usize, f64)> = keep
            .iter()
            .enumerate()
            .flat_map(|(k, &i)| {
                let position = &position;
                self.row(i).filter_map(move |(j, v)| (position[j] != usize::MAX).then(|| (k, position[j], v)))
            })
            .collect();
        Self::from_entries(self.kind, keep.len(), &entries)
    }

    /// Dense copy, for small checks.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.dim]; self.dim];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        dense
    }

    /// Column-compressed copy for the sparse factorizations. Symmetry makes
    /// the row structure valid as column structure.
    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let symbolic = SymbolicSparseColMat::new_checked(self.dim, self.dim, self.row_ptr.clone(), None, self.col_idx.clone());
        SparseColMat::new(symbolic, self.values.clone())
    }

    /// Coordinate text: a `% kind dim nnz` header, then `row col value` lines
    /// with zero-based indices.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        let kind = serde_json::to_string(&self.kind).unwrap_or_default();
        let _ = writeln!(out, "% {} {} {}", kind.trim_matches('"'), self.dim, self.nnz());
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                let _ = writeln!(out, "{i} {j} {v:e}");
            }
        }
        out
    }
}
