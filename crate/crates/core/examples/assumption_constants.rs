//! Smoothing, approximation and prolongation constants on each level of a
//! 1D hierarchy.

use mgfault::analysis::{assumption_constants, two_grid_energy_norm};
use mgfault::discretization::{Dimension, GridHierarchy};
use mgfault::solver::{CycleConfig, Multigrid};

pub fn run() -> mgfault::Result<()> {
    let g = GridHierarchy::build(Dimension::One, 5, 2)?;
    let mg = Multigrid::new(&g, CycleConfig::default())?;
    println!("level,n,eta(1..6),C_A,|E^S|_A,1/smin(P),smax(P),|E^TG|_A");
    for level in 1..=g.finest() {
        let c = assumption_constants(&mg, level, 6)?;
        let eta: Vec<String> = c.smoothing.iter().map(|v| format!("{v:.3}")).collect();
        println!(
            "{level},{},{},{:.4},{:.4},{:.4},{:.4},{:.4}",
            c.n,
            eta.join(" "),
            c.approximation,
            c.smoother_energy_norm,
            c.prolongation_lower,
            c.prolongation_upper,
            two_grid_energy_norm(&mg, level)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mgfault::Result<()> {
    run()
}
