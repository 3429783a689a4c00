//! Fault-prone two-grid method with and without a protected prolongation.

use mgfault::analysis::{lyapunov_estimate, replica_bound, FaultyCycle, LyapunovOptions, SecondMomentModel};
use mgfault::discretization::{Dimension, GridHierarchy};
use mgfault::faults::{rng_stream, FaultSiteConfig, FaultSpec, Site};
use mgfault::solver::{CycleConfig, Multigrid};

pub fn run() -> mgfault::Result<()> {
    let opts = LyapunovOptions { chains: 4, steps: 200, burn_in: 20 };
    println!("n,q,rho_all_sites,rho_protected_p,replica_bound_protected");
    for cells in [8, 16, 32] {
        let g = GridHierarchy::two_grid(Dimension::Two, cells)?;
        let mg = Multigrid::new(&g, CycleConfig::default())?;
        for q in [0.1, 0.3, 0.5] {
            let all = FaultSiteConfig::uniform(FaultSpec::componentwise(q));
            let safe = all.protect(Site::Prolongation);
            let rho = |faults| {
                lyapunov_estimate(&FaultyCycle { mg: &mg, level: 1, faults }, &opts, &mut rng_stream(5, cells as u64))
                    .map(|e| e.rho)
            };
            let bound = if cells == 8 {
                format!("{:.4}", replica_bound(&SecondMomentModel::assemble(&mg, 1, &safe)?)?)
            } else {
                String::new()
            };
            println!("{},{q},{:.4},{:.4},{bound}", g.level(1).n, rho(all)?, rho(safe)?);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mgfault::Result<()> {
    run()
}
