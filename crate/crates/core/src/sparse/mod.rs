//! Compressed-row matrices, direct solvers and the Newton driver.
//!
//! Systems arising here are small enough (a few thousand unknowns at most)
//! that factorizations are carried out densely.

mod newton;

pub use newton::{newton_solve, NewtonOutcome, NewtonSettings, NewtonSolver};

use faer::linalg::solvers::{Llt, PartialPivLu, Solve};
use faer::Col;
use faer::{Mat, Side};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` entries; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "entry ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// `y = A^T x`
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            for (c, v) in self.row(r) {
                y[c] += v * xr;
            }
        }
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                t.push((c, r, v));
            }
        }
        SparseMatrix::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }
}

/// Dense LU factorization with partial pivoting.
pub struct DenseLu {
    lu: PartialPivLu<f64>,
    n: usize,
}

impl DenseLu {
    pub fn new(a: &Mat<f64>) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols(), "LU of a non-square matrix");
        let n = a.nrows();
        let scale = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].abs())
            .fold(0.0, f64::max);
        if !scale.is_finite() {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let lu = a.partial_piv_lu();
        let u = lu.U();
        let tol = scale.max(f64::MIN_POSITIVE) * n as f64 * f64::EPSILON;
        for i in 0..n {
            if u[(i, i)].abs() <= tol {
                return Err(Error::Singular { row: i });
            }
        }
        Ok(DenseLu { lu, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let rhs = Col::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[i]).collect()
    }
}

/// Solves `A x = b` by dense LU.
pub fn lu_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() || b.len() != a.nrows() {
        return Err(Error::InvalidInput(format!(
            "lu_solve: matrix {}x{} with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    Ok(DenseLu::new(&a.to_dense())?.solve(b))
}

/// Factorized symmetric positive definite matrix (mass matrices).
pub enum SpdSolver {
    Diagonal(Vec<f64>),
    Dense { llt: Llt<f64>, n: usize },
}

impl SpdSolver {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let n = a.nrows();
        let diagonal = (0..n).all(|r| a.row(r).all(|(c, v)| c == r || v == 0.0));
        if diagonal {
            let d: Vec<f64> = (0..n).map(|r| a.get(r, r)).collect();
            if let Some(row) = d.iter().position(|&v| !(v > 0.0)) {
                return Err(Error::Singular { row });
            }
            return Ok(SpdSolver::Diagonal(d));
        }
        let llt = a
            .to_dense()
            .llt(Side::Lower)
            .map_err(|_| Error::Singular { row: 0 })?;
        Ok(SpdSolver::Dense { llt, n })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            SpdSolver::Diagonal(d) => b.iter().zip(d).map(|(b, d)| b / d).collect(),
            SpdSolver::Dense { llt, n } => {
                assert_eq!(b.len(), *n);
                let rhs = Col::from_fn(*n, |i| b[i]);
                let x = llt.solve(&rhs);
                (0..*n).map(|i| x[i]).collect()
            }
        }
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, -1.0)]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(0, 0), 0.0);
        assert_eq!(a.transpose().get(1, 0), 3.0);
    }

    #[test]
    fn singular_matrix_reports_row() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)]);
        match lu_solve(&a, &[1.0, 2.0]) {
            Err(Error::Singular { row }) => assert_eq!(row, 1),
            other => panic!("expected singular error, got {other:?}"),
        }
    }
}
