//! Lyapunov spectral radius of faulty damped Jacobi against the closed-form
//! bound and its corollary.

use mgfault::analysis::{
    lyapunov_estimate, smoother_bound, smoother_corollary_bound, smoother_threshold, FaultySmoother,
    LyapunovOptions,
};
use mgfault::discretization::{Dimension, GridHierarchy};
use mgfault::faults::{rng_stream, FaultSpec};
use mgfault::linalg::{spectral_norm, DenseMatrix};
use mgfault::solver::{CycleConfig, Multigrid};

pub fn run() -> mgfault::Result<()> {
    let g = GridHierarchy::two_grid(Dimension::One, 32)?;
    let mg = Multigrid::new(&g, CycleConfig::default())?;
    let n = g.level(1).n;
    let na = mg.smoother(1).to_dense() * g.level(1).a.to_dense();
    let gamma = spectral_norm(&(DenseMatrix::identity(n, n) - &na), 1e-12)?;
    let na_norm = spectral_norm(&na, 1e-12)?;
    println!("n = {n}, |E| = {gamma:.5}, |NA| = {na_norm:.5}, threshold q < {:.2e}", smoother_threshold(gamma));

    let opts = LyapunovOptions { chains: 4, steps: 500, burn_in: 50 };
    println!("q,rho,stderr,bound,corollary");
    for (k, q) in [0.0, 0.02, 0.05, 0.1, 0.3].into_iter().enumerate() {
        let op = FaultySmoother { mg: &mg, level: 1, spec: FaultSpec::componentwise(q), sweeps: 1 };
        let est = lyapunov_estimate(&op, &opts, &mut rng_stream(1, k as u64))?;
        println!(
            "{q},{:.6},{:.1e},{:.4},{:.4}",
            est.rho,
            est.stderr,
            smoother_bound(gamma, na_norm, q),
            smoother_corollary_bound(gamma, q)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mgfault::Result<()> {
    run()
}
