//! Residual histories of the two-grid method on 2D Poisson, without and
//! with componentwise faults at every site.

use mgfault::discretization::{Dimension, GridHierarchy, Load};
use mgfault::faults::{rng_stream, FaultSiteConfig, FaultSpec, NoFaults, RandomFaults};
use mgfault::solver::{CycleConfig, Multigrid};

pub fn run() -> mgfault::Result<()> {
    for cells in [16, 32, 64] {
        let g = GridHierarchy::two_grid(Dimension::Two, cells)?;
        let mg = Multigrid::new(&g, CycleConfig::default())?;
        let b = g.assemble_load(1, Load::ConstantOne)?;
        let (_, clean) = mg.solve(&b, 1e-8, 30, &mut NoFaults)?;
        let mut faults =
            RandomFaults::new(FaultSiteConfig::uniform(FaultSpec::componentwise(0.01)), rng_stream(3, cells as u64));
        let (_, faulty) = mg.solve(&b, 1e-8, 30, &mut faults)?;
        println!(
            "n = {:5}: fault-free {:2} iterations, q = 0.01 {:2} iterations (converged: {})",
            g.level(1).n,
            clean.iterations,
            faulty.iterations,
            faulty.converged
        );
        if cells == 64 {
            println!("k,fault_free,faulty");
            let (c, f) = (clean.relative(), faulty.relative());
            for k in 0..c.len().max(f.len()) {
                let cell = |v: &[f64]| v.get(k).map(|x| format!("{x:.3e}")).unwrap_or_default();
                println!("{k},{},{}", cell(&c), cell(&f));
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mgfault::Result<()> {
    run()
}
