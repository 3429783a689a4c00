use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mgfault::harness::{export_matrices, run, ExperimentConfig, Mode};

/// Runs one fault-injection experiment and writes its CSV.
#[derive(Parser, Debug)]
#[command(name = "mgfault", version)]
struct Args {
    /// TOML experiment file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// residual_history, lyapunov_sweep, scaling_check, term_diagnostics or assumption_constants.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when neither this nor the config sets one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated fault rates.
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    /// Comma-separated level counts.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Also write the matrices of every size in Matrix Market format here.
    #[arg(long)]
    export_mm: Option<PathBuf>,
}

fn configure(args: &Args) -> mgfault::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(m) = &args.mode {
        cfg.mode = m.parse::<Mode>()?;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.output = Some(o.clone());
    }
    if let Some(q) = &args.q {
        cfg.q_grid = q.clone();
    }
    if let Some(s) = &args.sizes {
        cfg.size_grid = s.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match configure(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("mgfault: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(dir) = &args.export_mm {
        match export_matrices(&cfg, dir) {
            Ok(files) => eprintln!("wrote {} matrices to {}", files.len(), dir.display()),
            Err(e) => {
                eprintln!("mgfault: export: {e}");
                return ExitCode::from(2);
            }
        }
    }
    let out = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("mgfault: {e}");
            return ExitCode::FAILURE;
        }
    };
    match &cfg.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &out.csv) {
                eprintln!("mgfault: {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        }
        None => print!("{}", out.csv),
    }
    eprintln!("{}", out.summary);
    if out.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("mgfault: policy check failed");
        ExitCode::from(3)
    }
}
