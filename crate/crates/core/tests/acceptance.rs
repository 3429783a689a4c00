//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any fails.

use std::time::Instant;

use mgfault::analysis::{
    enumerate_second_moment, lyapunov_estimate, replica_bound, smoother_bound, smoother_threshold,
    FaultySmoother, LyapunovOptions, SecondMomentModel, term_diagnostics,
};
use mgfault::discretization::{Dimension, GridHierarchy};
use mgfault::faults::{rng_stream, FaultSiteConfig, FaultSpec, NoFaults, RandomFaults, Site};
use mgfault::harness::{
    run_lyapunov_sweep, run_residual_history, run_scaling_check, CellStatus, ExperimentConfig, Method, Mode,
    ProblemConfig, SolveOptions, SweepResult, Verdict,
};
use mgfault::linalg::{hadamard_power, spectral_norm, DenseMatrix};
use mgfault::solver::{CycleConfig, Multigrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err(e: mgfault::Error) -> String {
    e.to_string()
}

fn baseline() -> Check {
    let cfg = ExperimentConfig {
        mode: Mode::ResidualHistory,
        q_grid: vec![0.0],
        size_grid: vec![4, 6, 7, 8],
        problem: ProblemConfig { dimension: 2, base_cells: 2, method: Method::TwoGrid },
        solve: SolveOptions { tolerance: 1e-3, max_iterations: 9, fail_on_divergence: true, ..Default::default() },
        ..Default::default()
    };
    let h = run_residual_history(&cfg).map_err(err)?;
    let iters: Vec<(usize, usize)> = h.cells.iter().map(|c| (c.n, c.residual_norms.len() - 1)).collect();
    let all = h.cells.iter().all(|c| c.status == CellStatus::Converged);
    let lo = iters.iter().map(|i| i.1).min().unwrap_or(0);
    let hi = iters.iter().map(|i| i.1).max().unwrap_or(usize::MAX);
    ensure(all && hi <= 9 && hi - lo <= 1, format!("iterations to 1e-3 per n: {iters:?}"))
}

fn replica() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for &q in &[0.05, 0.2, 0.4] {
        for _ in 0..8 {
            let cells = [4usize, 8, 16][rng.random_range(0..3)];
            let pre = rng.random_range(0..=2);
            let post = rng.random_range(usize::from(pre == 0)..=2);
            let cycle = CycleConfig { damping: rng.random_range(0.5..1.0), ..CycleConfig::with_smoothing(pre, post) };
            let mut faults = FaultSiteConfig::uniform(FaultSpec::componentwise(q));
            for site in Site::ALL {
                if rng.random_bool(0.25) {
                    faults = faults.protect(site);
                }
            }
            let g = GridHierarchy::two_grid(Dimension::One, cells).map_err(err)?;
            let mg = Multigrid::new(&g, cycle).map_err(err)?;
            let bound = replica_bound(&SecondMomentModel::assemble(&mg, 1, &faults).map_err(err)?).map_err(err)?;
            let op = mgfault::analysis::FaultyCycle { mg: &mg, level: 1, faults };
            let est = lyapunov_estimate(&op, &LyapunovOptions::default(), &mut rng_stream(rng.random(), 0))
                .map_err(err)?;
            let excess = est.rho - (bound + 3.0 * est.stderr);
            worst = worst.max(excess);
            count += 1;
            if excess > 0.0 {
                return Err(format!(
                    "n={} q={q} nu=({pre},{post}): rho {} > bound {} + 3·{}",
                    g.level(1).n,
                    est.rho,
                    bound,
                    est.stderr
                ));
            }
        }
    }
    Ok(format!("{count} instances, max rho − (bound + 3·stderr) = {worst:.3e}"))
}

fn enumeration() -> Check {
    let g = GridHierarchy::two_grid(Dimension::One, 4).map_err(err)?;
    let mg = Multigrid::new(&g, CycleConfig::with_smoothing(1, 1)).map_err(err)?;
    let mut worst = 0.0f64;
    for q in [0.25, 0.5] {
        let faults = FaultSiteConfig::uniform(FaultSpec::componentwise(q));
        let analytic = SecondMomentModel::assemble(&mg, 1, &faults).map_err(err)?.assembled().map_err(err)?;
        let exact = enumerate_second_moment(&mg, 1, &faults).map_err(err)?;
        worst = worst.max((analytic - exact).amax());
    }
    ensure(worst <= 1e-12, format!("max entrywise difference {worst:.3e}"))
}

const SWEEP_Q: [f64; 8] = [0.0, 0.005, 0.01, 0.02, 0.04, 0.08, 0.16, 0.32];
const SWEEP_SIZES: [usize; 4] = [5, 6, 7, 8];

fn sweep_config(faults: FaultSiteConfig, q_grid: Vec<f64>) -> ExperimentConfig {
    ExperimentConfig {
        mode: Mode::ScalingCheck,
        seed: 4,
        q_grid,
        size_grid: SWEEP_SIZES.to_vec(),
        problem: ProblemConfig { dimension: 2, base_cells: 2, method: Method::TwoGrid },
        faults,
        lyapunov: LyapunovOptions { chains: 4, steps: 250, burn_in: 25 },
        ..Default::default()
    }
}

fn sizes_of(s: &SweepResult) -> Vec<usize> {
    let mut n: Vec<usize> = s.rows.iter().map(|r| r.n).collect();
    n.dedup();
    n
}

fn scaling() -> Check {
    let cfg = sweep_config(FaultSiteConfig::uniform(FaultSpec::componentwise(0.0)), SWEEP_Q.to_vec());
    let report = run_scaling_check(&cfg).map_err(err)?;
    let sweep = &report.sweep;
    let rho = |n, q| sweep.get(n, q).map(|e| e.rho).unwrap_or(f64::NAN);
    let sizes = sizes_of(sweep);
    let mut out = Vec::new();
    let mut ok = sweep.rows.iter().all(|r| r.status == CellStatus::Ok);

    let peaks: Vec<(usize, f64)> =
        sizes.iter().map(|&n| (n, SWEEP_Q.iter().map(|&q| rho(n, q)).fold(0.0, f64::max))).collect();
    let a = peaks.iter().all(|p| p.1 > 1.0);
    out.push(format!("(a) {} max rho per n {peaks:.3?}", if a { "ok" } else { "FAIL" }));

    let b = report.verdict == Verdict::Pass;
    out.push(format!("(b) {} {}", if b { "ok" } else { "FAIL" }, report.summary()));

    let mut worst = 0.0f64;
    let mut pairs = 0;
    for w in sizes.windows(2) {
        for &q in &SWEEP_Q[1..] {
            let (r_small, r_big) = (rho(w[0], 2.0 * q), rho(w[1], q));
            if r_small > 1.0 && r_big > 1.0 {
                worst = worst.max((r_small - r_big).abs() / r_big);
                pairs += 1;
            }
        }
    }
    let c = pairs > 0 && worst <= 0.10;
    out.push(format!("(c) {} {pairs} equal-q√n pairs, max relative gap {worst:.4}", if c { "ok" } else { "FAIL" }));
    ok &= a && b && c;
    ensure(ok, out.join("; "))
}

fn protected() -> Check {
    let mut q = SWEEP_Q.to_vec();
    q.push(0.5);
    let faults = FaultSiteConfig::uniform(FaultSpec::componentwise(0.0)).protect(Site::Prolongation);
    let cfg = ExperimentConfig { mode: Mode::LyapunovSweep, ..sweep_config(faults, q.clone()) };
    let sweep = run_lyapunov_sweep(&cfg).map_err(err)?;
    let max_rho = sweep.rows.iter().filter_map(|r| r.estimate.as_ref()).map(|e| e.rho).fold(0.0, f64::max);
    let reliable = sweep.rows.iter().all(|r| r.status == CellStatus::Ok);
    let mut spread = 0.0f64;
    for &qq in &q {
        let v: Vec<f64> = sizes_of(&sweep).iter().filter_map(|&n| sweep.get(n, qq)).map(|e| e.rho).collect();
        let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
        spread = spread.max(hi - lo);
    }
    ensure(
        reliable && max_rho < 1.0 && spread <= 0.05,
        format!("max rho {max_rho:.4} over q ≤ 0.5, max spread across sizes {spread:.4}"),
    )
}

fn smoother() -> Check {
    let g = GridHierarchy::two_grid(Dimension::One, 32).map_err(err)?;
    let mg = Multigrid::new(&g, CycleConfig::default()).map_err(err)?;
    let a = g.level(1).a.to_dense();
    let n = a.nrows();
    let na = mg.smoother(1).to_dense() * &a;
    let gamma = spectral_norm(&(DenseMatrix::identity(n, n) - &na), 1e-12).map_err(err)?;
    let na_norm = spectral_norm(&na, 1e-12).map_err(err)?;
    let opts = LyapunovOptions::default();
    let measure = |q: f64, stream: u64| {
        let op = FaultySmoother { mg: &mg, level: 1, spec: FaultSpec::componentwise(q), sweeps: 1 };
        lyapunov_estimate(&op, &opts, &mut rng_stream(6, stream)).map_err(err)
    };
    let mut lines = Vec::new();
    let mut ok = true;
    for (k, q) in [0.02, 0.05, 0.1].into_iter().enumerate() {
        let est = measure(q, k as u64)?;
        let bound = smoother_bound(gamma, na_norm, q);
        ok &= est.rho <= bound;
        lines.push(format!("q={q}: {:.5} ≤ {bound:.5}", est.rho));
    }
    // Divergence onset on a doubling grid against the sufficient threshold.
    let threshold = smoother_threshold(gamma);
    let mut grid: Vec<f64> = (0..11).map(|k| 0.0005 * 2f64.powi(k)).collect();
    grid.extend([0.75, 0.9, 0.99]);
    let mut onset = None;
    for (k, &q) in grid.iter().enumerate() {
        if measure(q, 100 + k as u64)?.rho >= 1.0 {
            onset = Some(k);
            break;
        }
    }
    let t_idx = grid.iter().position(|q| *q >= threshold).unwrap_or(grid.len());
    let consistent = onset.is_some_and(|o| o >= t_idx.saturating_sub(1) && o <= t_idx + 1);
    ok &= consistent;
    lines.push(match onset {
        Some(o) => format!("threshold {threshold:.2e}, observed onset q={}", grid[o]),
        None => format!(
            "threshold {threshold:.2e}, no divergence observed up to q={} (onset check failed)",
            grid[grid.len() - 1]
        ),
    });
    ensure(ok, lines.join("; "))
}

fn hadamard() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut min_slack = f64::INFINITY;
    for _ in 0..200 {
        let (r, c) = (rng.random_range(1..12), rng.random_range(1..12));
        let z = DenseMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
        let lhs = spectral_norm(&hadamard_power(&z, 2), 1e-12).map_err(err)?;
        let col_max = z.column_iter().map(|v| v.norm()).fold(0.0, f64::max);
        let row_max = z.row_iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mid = col_max * row_max;
        let rhs = spectral_norm(&z, 1e-12).map_err(err)?.powi(2);
        let tol = 1e-12 * rhs;
        min_slack = min_slack.min(mid - lhs + tol).min(rhs - mid + tol);
    }
    ensure(min_slack >= 0.0, format!("200 matrices, min slack {min_slack:.3e}"))
}

fn diagnostics() -> Check {
    let mut total = 0;
    for (dim, cells) in [(Dimension::One, 8), (Dimension::One, 16), (Dimension::Two, 8)] {
        let g = GridHierarchy::two_grid(dim, cells).map_err(err)?;
        let mg = Multigrid::new(&g, CycleConfig::default()).map_err(err)?;
        for faults in [
            FaultSiteConfig::uniform(FaultSpec::componentwise(0.2)),
            FaultSiteConfig::uniform(FaultSpec::componentwise(0.2)).protect(Site::Prolongation),
            FaultSiteConfig::uniform(FaultSpec::Silent { q: 0.1, amplitude: 0.3 }),
        ] {
            let r = term_diagnostics(&SecondMomentModel::assemble(&mg, 1, &faults).map_err(err)?).map_err(err)?;
            if !r.all_hold() {
                return Err(format!("n={}: {}", g.level(1).n, r.summary().trim()));
            }
            total += r.rows.len();
        }
    }
    Ok(format!("{total} inequalities hold on n ∈ {{7, 15, 49}}"))
}

fn structure() -> Check {
    let mut worst = 0.0f64;
    for dim in [Dimension::One, Dimension::Two] {
        let g = GridHierarchy::build(dim, 3, 2).map_err(err)?;
        for l in 1..=g.finest() {
            let (p, r) = (g.prolongation_into(l), g.restriction_from(l));
            worst = worst.max(p.transpose().max_abs_distance(r).map_err(err)?);
            let rap = r.matmul(&g.level(l).a).and_then(|ra| ra.matmul(p)).map_err(err)?;
            worst = worst.max(rap.max_abs_distance(&g.level(l - 1).a).map_err(err)?);
        }
        let mg = Multigrid::new(&g, CycleConfig::default()).map_err(err)?;
        let top = g.finest();
        let n = g.level(top).n;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        // Fault-prone cycle with q = 0 reproduces the fault-free cycle.
        let clean = mg.apply_error_operator(top, &u, &mut NoFaults).map_err(err)?;
        let mut zero = RandomFaults::new(FaultSiteConfig::uniform(FaultSpec::componentwise(0.0)), rng_stream(1, 0));
        let q0 = mg.apply_error_operator(top, &u, &mut zero).map_err(err)?;
        worst = worst.max(clean.iter().zip(&q0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        // Linearity of E.
        let mix: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let ev = mg.apply_error_operator(top, &v, &mut NoFaults).map_err(err)?;
        let emix = mg.apply_error_operator(top, &mix, &mut NoFaults).map_err(err)?;
        let scale = emix.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let lin = (0..n).map(|i| (emix[i] - 2.0 * clean[i] + 3.0 * ev[i]).abs()).fold(0.0, f64::max) / scale;
        worst = worst.max(lin);
        // Bare two-grid coarse correction is a projection.
        let g2 = GridHierarchy::two_grid(dim, 8).map_err(err)?;
        let cg = Multigrid::new(&g2, CycleConfig::with_smoothing(0, 0)).map_err(err)?;
        let e = cg.error_matrix(1, &mut NoFaults).map_err(err)?;
        worst = worst.max((&e * &e - &e).amax());
    }
    ensure(worst <= 1e-12, format!("max deviation {worst:.3e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("1 fault-free baseline", baseline),
        ("2 replica inequality", replica),
        ("3 second-moment enumeration", enumeration),
        ("4 non-resilience scaling", scaling),
        ("5 protected prolongation", protected),
        ("6 smoother bound", smoother),
        ("7 hadamard estimate", hadamard),
        ("8 term diagnostics", diagnostics),
        ("9 structural invariants", structure),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let result = check();
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("PASS criterion {name} ({secs:.1}s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {msg}");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
