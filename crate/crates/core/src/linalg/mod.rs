//! Dense and sparse kernels, Kronecker/Hadamard algebra and norms.
//!
//! Dense matrices are `nalgebra::DMatrix<f64>`; sparse ones use the CSR
//! [`SparseMatrix`] defined here.

mod banded;
mod matrix_market;
mod products;
mod sparse;
mod spectral;

pub use banded::BandCholesky;
pub use matrix_market::{read_matrix_market, write_matrix_market};
pub use products::{
    frobenius_norm, hadamard, hadamard_power, kron, kron_sparse, vec, DiagonalMatrix,
    KronOperator, KRON_ENTRY_CAP,
};
pub use sparse::SparseMatrix;
pub use spectral::{
    energy_norm, energy_norm_with, kron_square_left_mul, kron_square_right_mul, spectral_norm,
    spectral_norm_with, spectral_radius, spectral_radius_with, tensor_energy_norm, EnergyKind,
    LinearOperator, SpdRoots, SpectralOptions, DEFAULT_TOL, DENSE_CAP,
};

pub type DenseMatrix = nalgebra::DMatrix<f64>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
