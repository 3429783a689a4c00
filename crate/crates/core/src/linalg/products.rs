//! Kronecker and Hadamard products, vectorization, and the diagonal type.

use nalgebra::DMatrix;

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// Stored-entry cap for materialized Kronecker products.
pub const KRON_ENTRY_CAP: usize = 10_000_000;

/// Dense Kronecker product with `(Z⊗Y)[i·r + p, j·c + q] = Z[i,j]·Y[p,q]`,
/// where `r × c` is the shape of `Y`.
pub fn kron(z: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (r, c) = y.shape();
    let entries = z.len().saturating_mul(y.len());
    if entries > KRON_ENTRY_CAP * 4 {
        return Err(Error::KroneckerCap {
            entries,
            cap: KRON_ENTRY_CAP * 4,
        });
    }
    let mut out = DMatrix::zeros(z.nrows() * r, z.ncols() * c);
    for j in 0..z.ncols() {
        for i in 0..z.nrows() {
            let zij = z[(i, j)];
            if zij == 0.0 {
                continue;
            }
            for q in 0..c {
                for p in 0..r {
                    out[(i * r + p, j * c + q)] = zij * y[(p, q)];
                }
            }
        }
    }
    Ok(out)
}

/// Sparse Kronecker product; refuses to store more than [`KRON_ENTRY_CAP`] entries.
pub fn kron_sparse(z: &SparseMatrix, y: &SparseMatrix) -> Result<SparseMatrix> {
    let entries = z.nnz().saturating_mul(y.nnz());
    if entries > KRON_ENTRY_CAP {
        return Err(Error::KroneckerCap {
            entries,
            cap: KRON_ENTRY_CAP,
        });
    }
    let (r, c) = (y.nrows(), y.ncols());
    let mut row_offsets = Vec::with_capacity(z.nrows() * r + 1);
    let mut col_indices = Vec::with_capacity(entries);
    let mut values = Vec::with_capacity(entries);
    row_offsets.push(0);
    for i in 0..z.nrows() {
        let (zc, zv) = z.row(i);
        for p in 0..r {
            let (yc, yv) = y.row(p);
            for (&j, &a) in zc.iter().zip(zv) {
                for (&q, &b) in yc.iter().zip(yv) {
                    col_indices.push(j * c + q);
                    values.push(a * b);
                }
            }
            row_offsets.push(col_indices.len());
        }
    }
    SparseMatrix::from_csr(z.nrows() * r, z.ncols() * c, row_offsets, col_indices, values)
}

/// Matrix-free `Z⊗Y` for sweeps where materialization is out of reach.
///
/// Uses `(Z⊗Y) v = vec_r(Z V Yᵀ)` where `V` is `v` reshaped row-major into
/// `cols(Z) × cols(Y)`.
#[derive(Debug, Clone)]
pub struct KronOperator<'a> {
    pub left: &'a SparseMatrix,
    pub right: &'a SparseMatrix,
}

impl KronOperator<'_> {
    pub fn nrows(&self) -> usize {
        self.left.nrows() * self.right.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.left.ncols() * self.right.ncols()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.ncols() {
            return Err(Error::DimensionMismatch {
                context: "kron operator input",
                expected: self.ncols(),
                actual: v.len(),
            });
        }
        let (m, c) = (self.left.ncols(), self.right.ncols());
        let r = self.right.nrows();
        // W = V Yᵀ : rows j ∈ cols(Z), columns p ∈ rows(Y)
        let mut w = vec![0.0; m * r];
        for j in 0..m {
            let vrow = &v[j * c..(j + 1) * c];
            for p in 0..r {
                let (yc, yv) = self.right.row(p);
                w[j * r + p] = yc.iter().zip(yv).map(|(&q, &b)| b * vrow[q]).sum();
            }
        }
        let mut out = vec![0.0; self.nrows()];
        for i in 0..self.left.nrows() {
            let (zc, zv) = self.left.row(i);
            let orow = &mut out[i * r..(i + 1) * r];
            for (&j, &a) in zc.iter().zip(zv) {
                for p in 0..r {
                    orow[p] += a * w[j * r + p];
                }
            }
        }
        Ok(out)
    }
}

pub fn hadamard(z: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if z.shape() != y.shape() {
        return Err(Error::DimensionMismatch {
            context: "hadamard shapes",
            expected: z.len(),
            actual: y.len(),
        });
    }
    Ok(z.component_mul(y))
}

/// Entrywise `k`-th power.
pub fn hadamard_power(z: &DMatrix<f64>, k: i32) -> DMatrix<f64> {
    z.map(|v| v.powi(k))
}

/// Column-stacking vectorization.
pub fn vec(z: &DMatrix<f64>) -> Vec<f64> {
    // nalgebra stores column-major, which is exactly column stacking.
    z.as_slice().to_vec()
}

pub fn frobenius_norm(z: &DMatrix<f64>) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// A diagonal matrix stored as its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMatrix {
    diag: Vec<f64>,
}

impl DiagonalMatrix {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag }
    }

    pub fn identity(n: usize) -> Self {
        Self { diag: vec![1.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.diag
    }

    pub fn is_identity(&self) -> bool {
        self.diag.iter().all(|&d| d == 1.0)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.diag.len() {
            return Err(Error::DimensionMismatch {
                context: "diagonal apply",
                expected: self.diag.len(),
                actual: x.len(),
            });
        }
        Ok(x.iter().zip(&self.diag).map(|(a, d)| a * d).collect())
    }

    pub fn apply_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.diag.len());
        x.iter_mut().zip(&self.diag).for_each(|(a, d)| *a *= d);
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag))
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        SparseMatrix::from_diagonal(&self.diag)
    }
}
