use std::path::Path;
use std::process::Command;

use mgfault::harness::ExperimentConfig;

fn mgfault(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mgfault"))
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 5);
}

#[test]
fn flags_override_config_and_output_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("terms.csv");
    let args = ["--config", "configs/terms_1d.toml", "--q", "0.1", "--sizes", "2", "--seed", "5"];
    let first = mgfault(&[&args[..], &["--out", out.to_str().unwrap()]].concat());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("# mgfault mode=term_diagnostics seed=5 config_sha256="));
    assert!(csv.lines().skip(2).all(|l| l.starts_with("2,7,0.1,")));
    let second = mgfault(&args);
    assert_eq!(String::from_utf8(second.stdout).unwrap(), csv);
}

#[test]
fn exit_codes() {
    let bad = mgfault(&["--mode", "lyapunov_sweep", "--sizes", "3"]);
    assert_eq!(bad.status.code(), Some(2), "empty q grid");
    let bad = mgfault(&["--mode", "sweep", "--q", "0.1", "--sizes", "3"]);
    assert_eq!(bad.status.code(), Some(2), "unknown mode");
    let diverging = mgfault(&[
        "--config",
        "configs/residual_history_2d.toml",
        "--q",
        "0.9",
        "--sizes",
        "3",
    ]);
    assert!(diverging.status.success(), "divergence is reported, not fatal, by default");
    assert!(String::from_utf8(diverging.stdout).unwrap().lines().skip(2).all(|l| !l.ends_with(",converged")));
}

#[test]
fn matrix_market_export() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("mm");
    let run = mgfault(&[
        "--config",
        "configs/constants_1d.toml",
        "--sizes",
        "2",
        "--export-mm",
        dir.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let a = std::fs::File::open(dir.join("size_2").join("A_2.mtx")).unwrap();
    let m = mgfault::linalg::read_matrix_market(std::io::BufReader::new(a)).unwrap();
    assert_eq!(m.nrows(), 7);
}
