//! Spectral norms, spectral radii and energy norms.
//!
//! Small problems go through dense decompositions; anything above
//! `dense_cap` rows is handled by power iteration from a seeded start vector.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

pub const DENSE_CAP: usize = 4096;
pub const DEFAULT_TOL: f64 = 1e-10;
const START_SEED: u64 = 0x5eed_1e55;

/// Anything that can apply itself and its transpose to a vector.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);
    /// Dense copy, when one is cheap enough to form.
    fn to_dense_matrix(&self) -> Option<DMatrix<f64>>;
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let out = self * DVector::from_column_slice(x);
        y.copy_from_slice(out.as_slice());
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        let out = self.tr_mul(&DVector::from_column_slice(x));
        y.copy_from_slice(out.as_slice());
    }
    fn to_dense_matrix(&self) -> Option<DMatrix<f64>> {
        Some(self.clone())
    }
}

impl LinearOperator for SparseMatrix {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y);
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.spmv_transpose(x).expect("transpose apply dimension"));
    }
    fn to_dense_matrix(&self) -> Option<DMatrix<f64>> {
        if self.nrows().max(self.ncols()) <= DENSE_CAP {
            Some(self.to_dense())
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    pub tol: f64,
    pub dense_cap: usize,
    /// Iteration cap is `max_iter_factor · dimension`.
    pub max_iter_factor: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            dense_cap: DENSE_CAP,
            max_iter_factor: 10,
        }
    }
}

impl SpectralOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

fn start_vector(n: usize, salt: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED ^ salt);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut v);
    v
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// `‖Z‖₂` with relative accuracy `tol`.
pub fn spectral_norm<O: LinearOperator + ?Sized>(z: &O, tol: f64) -> Result<f64> {
    spectral_norm_with(z, &SpectralOptions::with_tol(tol))
}

pub fn spectral_norm_with<O: LinearOperator + ?Sized>(z: &O, opts: &SpectralOptions) -> Result<f64> {
    if opts.tol <= 0.0 {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let (m, n) = (z.nrows(), z.ncols());
    if m == 0 || n == 0 {
        return Ok(0.0);
    }
    if m.max(n) <= opts.dense_cap {
        if let Some(d) = z.to_dense_matrix() {
            return Ok(d.svd(false, false).singular_values.max());
        }
    }
    // Power iteration on ZᵀZ.
    let cap = opts.max_iter_factor * n.max(m);
    let mut v = start_vector(n, 1);
    let mut zv = vec![0.0; m];
    let mut w = vec![0.0; n];
    let mut last = 0.0;
    for _ in 0..cap {
        z.apply(&v, &mut zv);
        z.apply_transpose(&zv, &mut w);
        let lambda = normalize(&mut w);
        if lambda == 0.0 {
            return Ok(0.0);
        }
        std::mem::swap(&mut v, &mut w);
        if (lambda - last).abs() <= opts.tol * lambda {
            return Ok(lambda.sqrt());
        }
        last = lambda;
    }
    Err(Error::NotConverged {
        iterations: cap,
        last: last.sqrt(),
    })
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius<O: LinearOperator + ?Sized>(z: &O, tol: f64) -> Result<f64> {
    spectral_radius_with(z, &SpectralOptions::with_tol(tol))
}

pub fn spectral_radius_with<O: LinearOperator + ?Sized>(z: &O, opts: &SpectralOptions) -> Result<f64> {
    let n = z.nrows();
    if n != z.ncols() {
        return Err(Error::DimensionMismatch {
            context: "spectral radius needs a square matrix",
            expected: n,
            actual: z.ncols(),
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    if n <= opts.dense_cap {
        if let Some(d) = z.to_dense_matrix() {
            return dense_spectral_radius(d);
        }
    }
    power_radius(z, opts)
}

fn dense_spectral_radius(d: DMatrix<f64>) -> Result<f64> {
    let symmetric = (&d - d.transpose()).amax() == 0.0;
    if symmetric {
        return Ok(d.symmetric_eigenvalues().amax());
    }
    // nalgebra's Schur iteration stalls on matrices with large clusters of
    // tiny eigenvalues (Kronecker squares of error operators); faer's
    // Hessenberg QR deflates them reliably.
    let m = faer::Mat::<f64>::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)]);
    let eig = m
        .eigenvalues()
        .map_err(|e| Error::InvalidStructure(format!("eigenvalue solver failed: {e:?}")))?;
    Ok(eig.iter().map(|c| c.re.hypot(c.im)).fold(0.0, f64::max))
}

fn power_radius<O: LinearOperator + ?Sized>(z: &O, opts: &SpectralOptions) -> Result<f64> {
    let n = z.nrows();
    let cap = opts.max_iter_factor * n;
    let mut w = vec![0.0; n];
    let mut last_two_step = f64::NAN;
    for restart in 0..3u64 {
        let mut v = start_vector(n, 7 + restart);
        let mut history: Vec<f64> = Vec::with_capacity(cap.min(4096));
        for _ in 0..cap {
            z.apply(&v, &mut w);
            let growth = normalize(&mut w);
            if growth == 0.0 {
                return Ok(0.0);
            }
            std::mem::swap(&mut v, &mut w);
            if let Some(&prev) = history.last() {
                if (growth - prev).abs() <= opts.tol * growth {
                    return Ok(growth);
                }
            }
            history.push(growth);
        }
        // A complex or ± pair makes the one-step growth oscillate while the
        // two-step growth settles.
        let k = history.len();
        if k >= 4 {
            let a = (history[k - 1] * history[k - 2]).sqrt();
            let b = (history[k - 3] * history[k - 4]).sqrt();
            last_two_step = a;
            if (a - b).abs() <= 1e3 * opts.tol * a {
                return Err(Error::NoDominantEigenvalue { last: a });
            }
        }
    }
    Err(Error::NotConverged {
        iterations: cap,
        last: last_two_step,
    })
}

/// Which energy norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyKind {
    /// `‖A^{1/2} Z A^{-1/2}‖₂`
    A,
    /// `‖A Z A^{-1}‖₂`
    A2,
}

/// Symmetric square root and inverse square root of an SPD matrix.
#[derive(Debug, Clone)]
pub struct SpdRoots {
    pub sqrt: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
}

impl SpdRoots {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                context: "SPD roots need a square matrix",
                expected: a.nrows(),
                actual: a.ncols(),
            });
        }
        let eig = a.clone().symmetric_eigen();
        let min = eig.eigenvalues.min();
        if min <= 0.0 {
            return Err(Error::NotSpd { eigenvalue: min });
        }
        let q = &eig.eigenvectors;
        let build = |f: &dyn Fn(f64) -> f64| {
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
            q * d * q.transpose()
        };
        Ok(Self {
            sqrt: build(&|l| l.sqrt()),
            inv_sqrt: build(&|l| 1.0 / l.sqrt()),
            inverse: build(&|l| 1.0 / l),
        })
    }
}

/// Matrix energy norm of `Z` with respect to the SPD matrix `A`.
pub fn energy_norm(z: &DMatrix<f64>, a: &DMatrix<f64>, kind: EnergyKind) -> Result<f64> {
    let roots = SpdRoots::new(a)?;
    energy_norm_with(z, a, &roots, kind)
}

pub fn energy_norm_with(
    z: &DMatrix<f64>,
    a: &DMatrix<f64>,
    roots: &SpdRoots,
    kind: EnergyKind,
) -> Result<f64> {
    if z.shape() != a.shape() {
        return Err(Error::DimensionMismatch {
            context: "energy norm operand",
            expected: a.nrows(),
            actual: z.nrows(),
        });
    }
    let t = match kind {
        EnergyKind::A => &roots.sqrt * z * &roots.inv_sqrt,
        EnergyKind::A2 => a * z * &roots.inverse,
    };
    spectral_norm(&t, DEFAULT_TOL)
}

/// `(S⊗S) W` without forming `S⊗S`.
pub fn kron_square_left_mul(s: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.ncols();
    let m = s.nrows();
    assert_eq!(w.nrows(), n * n, "kron square left operand");
    let mut out = DMatrix::zeros(m * m, w.ncols());
    for c in 0..w.ncols() {
        // Column c reshaped row-major: index i·n + p → (i, p).
        let col = DMatrix::from_row_slice(n, n, w.column(c).as_slice());
        let t = s * col * s.transpose();
        for i in 0..m {
            for p in 0..m {
                out[(i * m + p, c)] = t[(i, p)];
            }
        }
    }
    out
}

/// `W (T⊗T)` without forming `T⊗T`.
pub fn kron_square_right_mul(w: &DMatrix<f64>, t: &DMatrix<f64>) -> DMatrix<f64> {
    kron_square_left_mul(&t.transpose(), &w.transpose()).transpose()
}

/// Tensor energy norm of an `n² × n²` matrix `W`.
pub fn tensor_energy_norm(
    w: &DMatrix<f64>,
    a: &DMatrix<f64>,
    roots: &SpdRoots,
    kind: EnergyKind,
    opts: &SpectralOptions,
) -> Result<f64> {
    let n = a.nrows();
    if w.nrows() != n * n || w.ncols() != n * n {
        return Err(Error::DimensionMismatch {
            context: "tensor energy norm operand",
            expected: n * n,
            actual: w.nrows(),
        });
    }
    let t = match kind {
        EnergyKind::A => kron_square_right_mul(&kron_square_left_mul(&roots.sqrt, w), &roots.inv_sqrt),
        EnergyKind::A2 => kron_square_right_mul(&kron_square_left_mul(a, w), &roots.inverse),
    };
    spectral_norm_with(&t, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::products::kron;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let b = random(n, n, seed);
        &b * b.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn norm_of_diagonal() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -3.0, 2.0]));
        assert!((spectral_norm(&d, 1e-12).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn norm_of_orthogonal() {
        let q = random(5, 5, 1).qr().q();
        assert!((spectral_norm(&q, 1e-12).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn power_path_matches_dense() {
        let z = random(6, 6, 2);
        let dense = spectral_norm(&z, 1e-12).unwrap();
        let opts = SpectralOptions {
            tol: 1e-13,
            dense_cap: 0,
            max_iter_factor: 2000,
        };
        let iterative = spectral_norm_with(&z, &opts).unwrap();
        assert!((dense - iterative).abs() < 1e-10 * dense);
        // Independent oracle: largest eigenvalue of ZᵀZ from the symmetric solver.
        let gram = z.transpose() * &z;
        let oracle = gram.symmetric_eigenvalues().max().sqrt();
        assert!((dense - oracle).abs() < 1e-12);
    }

    #[test]
    fn radius_cases() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, -0.9]));
        assert!((spectral_radius(&d, 1e-12).unwrap() - 0.9).abs() < 1e-14);
        let nil = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(spectral_radius(&nil, 1e-12).unwrap() < 1e-12);
    }

    #[test]
    fn power_radius_detects_rotation() {
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]) * 0.7;
        let opts = SpectralOptions {
            tol: 1e-10,
            dense_cap: 0,
            max_iter_factor: 50,
        };
        // A rotation keeps ‖Zv‖/‖v‖ constant, so this converges to 0.7.
        assert!((spectral_radius_with(&rot, &opts).unwrap() - 0.7).abs() < 1e-9);
        let flip = DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, -0.9]) + random(2, 2, 4) * 0.0;
        assert!((spectral_radius_with(&flip, &opts).unwrap() - 0.9).abs() < 1e-9);
        let osc = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.3]);
        let mixed = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let op = &mixed * &osc * mixed.clone().try_inverse().unwrap();
        let r = spectral_radius_with(&op, &opts);
        assert!(matches!(r, Err(Error::NoDominantEigenvalue { .. })), "{r:?}");
    }

    #[test]
    fn norm_equals_sqrt_radius_of_gram() {
        for seed in 0..10 {
            let z = random(5, 4, seed);
            let n = spectral_norm(&z, 1e-12).unwrap();
            let r = spectral_radius(&(z.transpose() * &z), 1e-12).unwrap();
            assert!((n - r.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_norm_identity_and_projection() {
        let a = random_spd(4, 3);
        let i = DMatrix::identity(4, 4);
        assert!((energy_norm(&i, &a, EnergyKind::A).unwrap() - 1.0).abs() < 1e-12);
        assert!((energy_norm(&i, &a, EnergyKind::A2).unwrap() - 1.0).abs() < 1e-12);
        // A-orthogonal projection onto range(B): I - B (BᵀAB)⁻¹ Bᵀ A.
        let b = random(4, 2, 9);
        let btab = (b.transpose() * &a * &b).try_inverse().unwrap();
        let proj = &i - &b * btab * b.transpose() * &a;
        assert!((energy_norm(&proj, &a, EnergyKind::A).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_norm_matches_cholesky_route() {
        // Oracle: with A = L Lᵀ, ‖A^{1/2} Z A^{-1/2}‖ = ‖Lᵀ Z L⁻ᵀ‖ since A^{1/2} = U Lᵀ for orthogonal U.
        let a = random_spd(4, 12);
        let z = random(4, 4, 13);
        let l = a.clone().cholesky().unwrap().l();
        let lt_inv = l.transpose().try_inverse().unwrap();
        let oracle = spectral_norm(&(l.transpose() * &z * lt_inv), 1e-12).unwrap();
        let got = energy_norm(&z, &a, EnergyKind::A).unwrap();
        assert!((got - oracle).abs() < 1e-12 * oracle.max(1.0));
    }

    #[test]
    fn energy_norm_rejects_indefinite() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(
            energy_norm(&DMatrix::identity(2, 2), &a, EnergyKind::A),
            Err(Error::NotSpd { .. })
        ));
    }

    #[test]
    fn structured_kron_products() {
        let s = random(3, 3, 20);
        let w = random(9, 9, 21);
        let ss = kron(&s, &s).unwrap();
        assert!((kron_square_left_mul(&s, &w) - &ss * &w).amax() < 1e-13);
        assert!((kron_square_right_mul(&w, &s) - &w * &ss).amax() < 1e-13);
    }
}
