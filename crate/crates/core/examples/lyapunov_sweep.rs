//! A small Lyapunov sweep over `(n, q)` through the harness, followed by the
//! level-set fit of the size exponent. Larger sweeps take a TOML file:
//! `cargo run --release --bin mgfault -- --config configs/scaling_2d.toml`.

use mgfault::analysis::LyapunovOptions;
use mgfault::harness::{run_scaling_check, ExperimentConfig, Method, Mode, ProblemConfig, ScalingOptions};

pub fn run() -> mgfault::Result<()> {
    let cfg = ExperimentConfig {
        mode: Mode::ScalingCheck,
        seed: 1,
        q_grid: vec![0.0, 0.02, 0.04, 0.08, 0.16, 0.32],
        size_grid: vec![3, 4, 5],
        problem: ProblemConfig { dimension: 2, base_cells: 2, method: Method::TwoGrid },
        lyapunov: LyapunovOptions { chains: 4, steps: 200, burn_in: 20 },
        scaling: ScalingOptions { levels: vec![0.9, 1.1], ..Default::default() },
        ..Default::default()
    };
    let report = run_scaling_check(&cfg)?;
    print!("{}", report.to_csv(&cfg)?);
    println!("{}", report.summary());
    Ok(())
}

#[allow(dead_code)]
fn main() -> mgfault::Result<()> {
    run()
}
