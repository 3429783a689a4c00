//! Band-limited Cholesky factorization used for exact coarse-level solves.

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// `A = L Lᵀ` stored as the lower band of `L`, row-major: entry `(i, j)`
/// with `i - bw ≤ j ≤ i` lives at `i·(bw+1) + (j + bw - i)`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::DimensionMismatch {
                context: "band cholesky needs a square matrix",
                expected: n,
                actual: a.ncols(),
            });
        }
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for (i, j, v) in a.triplets() {
            if j <= i {
                band[i * w + (j + bw - i)] = v;
            }
        }
        for i in 0..n {
            let jlo = i.saturating_sub(bw);
            for j in jlo..=i {
                let klo = jlo.max(j.saturating_sub(bw));
                let mut s = band[i * w + (j + bw - i)];
                for k in klo..j {
                    s -= band[i * w + (k + bw - i)] * band[j * w + (k + bw - j)];
                }
                if j == i {
                    if s <= 0.0 {
                        return Err(Error::NotSpd { eigenvalue: s });
                    }
                    band[i * w + bw] = s.sqrt();
                } else {
                    band[i * w + (j + bw - i)] = s / band[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n, "band solve length");
        let (bw, w) = (self.bw, self.bw + 1);
        for i in 0..self.n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.band[i * w + (k + bw - i)] * x[k];
            }
            x[i] = s / self.band[i * w + bw];
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(self.n) {
                s -= self.band[k * w + (i + bw - k)] * x[k];
            }
            x[i] = s / self.band[i * w + bw];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "band solve rhs",
                expected: self.n,
                actual: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_banded_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 12;
        let bw = 3;
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                let v = rng.random_range(-1.0..1.0);
                dense[(i, j)] = v;
                dense[(j, i)] = v;
            }
            dense[(i, i)] = 8.0;
        }
        let a = SparseMatrix::from_dense(&dense);
        let chol = BandCholesky::factor(&a).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = chol.solve(&b).unwrap();
        let want = dense.lu().solve(&DVector::from_vec(b)).unwrap();
        for (a, b) in x.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = SparseMatrix::from_diagonal(&[1.0, -2.0]);
        assert!(BandCholesky::factor(&a).is_err());
    }
}
