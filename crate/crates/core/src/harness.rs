//! Experiment configuration and sweeps with CSV output.
//!
//! A run is described by an [`ExperimentConfig`], normally read from TOML:
//!
//! ```toml
//! mode = "lyapunov_sweep"
//! seed = 7
//! q_grid = [0.0, 0.01, 0.02, 0.04]
//! size_grid = [5, 6, 7]          # level counts
//!
//! [problem]
//! dimension = 2
//! base_cells = 2
//! method = "two_grid"
//!
//! [faults.smoother.spec]
//! kind = "componentwise"
//! q = 0.0                         # rate comes from q_grid
//! ```
//!
//! Size `L` means `base_cells · 2^L` cells per direction on the finest
//! level. With `method = "two_grid"` only that level and the one below it
//! are built; `method = "multigrid"` builds all `L + 1` levels.
//!
//! Every CSV starts with a comment line carrying the config hash and the
//! seed, then a header row. Cells run sequentially with an RNG stream
//! derived from `(seed, n, q)`, so output is byte-for-byte reproducible.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    assumption_constants, fit_degradation_exponent, lyapunov_estimate, scaling_exponent,
    term_diagnostics, two_grid_energy_norm, FaultyCycle, LyapunovEstimate, LyapunovOptions,
    ScalingFit, SecondMomentModel, SweepPoint,
};
use crate::discretization::{Dimension, GridHierarchy, Load};
use crate::error::{Error, Result};
use crate::faults::{rng_stream, FaultRng, FaultSiteConfig, RandomFaults};
use crate::linalg::DENSE_CAP;
use crate::solver::{CycleConfig, Multigrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ResidualHistory,
    LyapunovSweep,
    ScalingCheck,
    TermDiagnostics,
    AssumptionConstants,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::ResidualHistory,
        Mode::LyapunovSweep,
        Mode::ScalingCheck,
        Mode::TermDiagnostics,
        Mode::AssumptionConstants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::ResidualHistory => "residual_history",
            Mode::LyapunovSweep => "lyapunov_sweep",
            Mode::ScalingCheck => "scaling_check",
            Mode::TermDiagnostics => "term_diagnostics",
            Mode::AssumptionConstants => "assumption_constants",
        }
    }

    fn uses_rates(self) -> bool {
        self != Mode::AssumptionConstants
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Fine level plus one exactly solved coarse level.
    #[default]
    TwoGrid,
    /// Full hierarchy down to `base_cells`.
    Multigrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub dimension: usize,
    /// Cells per direction at size 0.
    pub base_cells: usize,
    pub method: Method,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self { dimension: 2, base_cells: 2, method: Method::TwoGrid }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RightHandSide {
    /// Entries uniform in `[-1, 1]`, seeded from `(seed, n)`.
    #[default]
    Random,
    /// Load vector of `f ≡ 1`.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub rhs: RightHandSide,
    /// Relative residual target.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Make the run fail when any solve diverges.
    pub fail_on_divergence: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { rhs: RightHandSide::Random, tolerance: 1e-8, max_iterations: 40, fail_on_divergence: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingOptions {
    /// Levels of `ϱ` whose contours are fitted.
    pub levels: Vec<f64>,
    /// Expected exponent; defaults to the one for the problem dimension.
    pub expected: Option<f64>,
    pub tolerance: f64,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self { levels: vec![1.2, 1.5, 2.0], expected: None, tolerance: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub q_grid: Vec<f64>,
    /// Level counts.
    pub size_grid: Vec<usize>,
    pub output: Option<PathBuf>,
    pub problem: ProblemConfig,
    pub cycle: CycleConfig,
    /// Fault kinds and protection; the rate at every site is replaced by
    /// each `q_grid` entry.
    pub faults: FaultSiteConfig,
    pub lyapunov: LyapunovOptions,
    pub solve: SolveOptions,
    pub scaling: ScalingOptions,
    /// Largest smoothing count in the assumption tables.
    pub max_sweeps: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::LyapunovSweep,
            seed: 0,
            q_grid: Vec::new(),
            size_grid: Vec::new(),
            output: None,
            problem: ProblemConfig::default(),
            cycle: CycleConfig::default(),
            faults: FaultSiteConfig::uniform(crate::faults::FaultSpec::componentwise(0.0)),
            lyapunov: LyapunovOptions::default(),
            solve: SolveOptions::default(),
            scaling: ScalingOptions::default(),
            max_sweeps: 6,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML form, ignoring the output path.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output = None;
        let digest = Sha256::digest(c.to_toml()?.as_bytes());
        Ok(digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        }))
    }

    pub fn dimension(&self) -> Result<Dimension> {
        Dimension::from_usize(self.problem.dimension)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.dimension()?;
        if self.size_grid.is_empty() {
            return bad("size_grid is empty".into());
        }
        if self.mode.uses_rates() && self.q_grid.is_empty() {
            return bad("q_grid is empty".into());
        }
        if let Some(q) = self.q_grid.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return bad(format!("rate {q} outside [0, 1]"));
        }
        if self.problem.base_cells < 2 {
            return bad("base_cells must be at least 2".into());
        }
        if let Some(l) = self.size_grid.iter().find(|l| **l == 0) {
            return bad(format!("size {l} has no coarse level"));
        }
        self.cycle.validate()?;
        if self.mode == Mode::ResidualHistory {
            self.cycle.validate_solver()?;
            if !(self.solve.tolerance > 0.0) || self.solve.max_iterations == 0 {
                return bad("solve needs tolerance > 0 and max_iterations ≥ 1".into());
            }
        }
        self.faults.validate()?;
        if self.mode.uses_rates()
            && self.q_grid.iter().any(|q| *q > 0.0)
            && self.faults.with_rate(0.5).is_fault_free()
        {
            return bad("q_grid has nonzero rates but no unprotected site has a fault kind".into());
        }
        if matches!(self.mode, Mode::LyapunovSweep | Mode::ScalingCheck) {
            self.lyapunov.validate()?;
        }
        if self.mode == Mode::ScalingCheck {
            let sizes: std::collections::BTreeSet<_> = self.size_grid.iter().collect();
            let rates = self.q_grid.iter().filter(|q| **q > 0.0).count();
            if sizes.len() < 3 || rates < 3 {
                return bad("scaling_check needs at least 3 sizes and 3 nonzero rates".into());
            }
            if self.scaling.levels.is_empty() {
                return bad("scaling.levels is empty".into());
            }
        }
        if self.mode == Mode::AssumptionConstants && self.max_sweeps == 0 {
            return bad("max_sweeps must be at least 1".into());
        }
        Ok(())
    }

    /// Hierarchy for one entry of `size_grid`.
    pub fn hierarchy(&self, size: usize) -> Result<GridHierarchy> {
        let dim = self.dimension()?;
        let base = self.problem.base_cells;
        match self.problem.method {
            Method::TwoGrid => {
                let coarse = base
                    .checked_shl(size as u32 - 1)
                    .filter(|c| c >> (size - 1) == base)
                    .ok_or_else(|| Error::InvalidParameter(format!("size {size} overflows")))?;
                GridHierarchy::build(dim, 1, coarse)
            }
            Method::Multigrid => GridHierarchy::build(dim, size, base),
        }
    }

    fn header(&self) -> Result<String> {
        Ok(format!("# mgfault mode={} seed={} config_sha256={}\n", self.mode.name(), self.seed, self.hash()?))
    }
}

/// RNG stream of one sweep cell.
pub fn cell_rng(seed: u64, n: usize, q: f64) -> FaultRng {
    let stream = (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ q.to_bits();
    rng_stream(seed, stream)
}

fn sanitize(msg: &str) -> String {
    msg.replace([',', '\n'], ";")
}

/// Outcome of a run: the CSV text, a short summary and whether the run's
/// policy checks passed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    pub summary: String,
    pub passed: bool,
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.mode {
        Mode::ResidualHistory => {
            let r = run_residual_history(cfg)?;
            let diverged = r.cells.iter().filter(|c| c.status == CellStatus::Diverged).count();
            Ok(RunOutput {
                csv: r.to_csv(cfg)?,
                summary: format!("{} cells, {} diverged", r.cells.len(), diverged),
                passed: !(cfg.solve.fail_on_divergence && diverged > 0),
            })
        }
        Mode::LyapunovSweep => {
            let s = run_lyapunov_sweep(cfg)?;
            let flagged = s.rows.iter().filter(|r| r.status != CellStatus::Ok).count();
            Ok(RunOutput {
                csv: s.to_csv(cfg)?,
                summary: format!("{} cells, {} flagged", s.rows.len(), flagged),
                passed: true,
            })
        }
        Mode::ScalingCheck => {
            let r = run_scaling_check(cfg)?;
            Ok(RunOutput { csv: r.to_csv(cfg)?, summary: r.summary(), passed: r.verdict != Verdict::Fail })
        }
        Mode::TermDiagnostics => {
            let r = run_term_diagnostics(cfg)?;
            let violated = r.rows.iter().filter(|r| r.holds == Some(false)).count();
            Ok(RunOutput {
                csv: r.to_csv(cfg)?,
                summary: format!("{} rows, {} violated", r.rows.len(), violated),
                passed: violated == 0,
            })
        }
        Mode::AssumptionConstants => {
            let r = run_assumption_constants(cfg)?;
            Ok(RunOutput { csv: r.to_csv(cfg)?, summary: r.summary(), passed: true })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok,
    Converged,
    Diverged,
    MaxIterations,
    Unreliable,
    Skipped(String),
}

impl CellStatus {
    fn label(&self) -> String {
        match self {
            CellStatus::Ok => "ok".into(),
            CellStatus::Converged => "converged".into(),
            CellStatus::Diverged => "diverged".into(),
            CellStatus::MaxIterations => "max_iterations".into(),
            CellStatus::Unreliable => "unreliable".into(),
            CellStatus::Skipped(why) => format!("skipped: {}", sanitize(why)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCell {
    pub size: usize,
    /// Fine-level unknowns; 0 when the size could not be built.
    pub n: usize,
    pub q: f64,
    pub residual_norms: Vec<f64>,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualHistory {
    pub cells: Vec<ResidualCell>,
}

impl ResidualHistory {
    pub fn to_csv(&self, cfg: &ExperimentConfig) -> Result<String> {
        let mut s = cfg.header()?;
        s.push_str("size,n,q,iteration,residual_norm,seed,status\n");
        for c in &self.cells {
            if c.residual_norms.is_empty() {
                let _ = writeln!(s, "{},{},{},,,{},{}", c.size, c.n, c.q, cfg.seed, c.status.label());
            }
            for (k, r) in c.residual_norms.iter().enumerate() {
                let _ = writeln!(s, "{},{},{},{},{:.12e},{},{}", c.size, c.n, c.q, k, r, cfg.seed, c.status.label());
            }
        }
        Ok(s)
    }
}

/// Solves `A x = b` from `x = 0` for every `(size, q)` cell.
pub fn run_residual_history(cfg: &ExperimentConfig) -> Result<ResidualHistory> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for &size in &cfg.size_grid {
        let g = match cfg.hierarchy(size) {
            Ok(g) => g,
            Err(e) => {
                for &q in &cfg.q_grid {
                    cells.push(ResidualCell {
                        size,
                        n: 0,
                        q,
                        residual_norms: Vec::new(),
                        status: CellStatus::Skipped(e.to_string()),
                    });
                }
                continue;
            }
        };
        let mg = Multigrid::new(&g, cfg.cycle)?;
        let top = g.finest();
        let n = g.level(top).n;
        let b = match cfg.solve.rhs {
            RightHandSide::Constant => g.assemble_load(top, Load::ConstantOne)?,
            RightHandSide::Random => {
                let mut rng = cell_rng(cfg.seed, n, -1.0);
                (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
            }
        };
        for &q in &cfg.q_grid {
            let mut faults = RandomFaults::new(cfg.faults.with_rate(q), cell_rng(cfg.seed, n, q));
            let (_, trace) = mg.solve(&b, cfg.solve.tolerance, cfg.solve.max_iterations, &mut faults)?;
            let status = if trace.converged {
                CellStatus::Converged
            } else if trace.diverged {
                CellStatus::Diverged
            } else {
                CellStatus::MaxIterations
            };
            cells.push(ResidualCell { size, n, q, residual_norms: trace.residual_norms, status });
        }
    }
    Ok(ResidualHistory { cells })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub size: usize,
    pub n: usize,
    pub q: f64,
    pub estimate: Option<LyapunovEstimate>,
    pub status: CellStatus,
}

/// One row per `(size, q)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Cells with a reliable estimate.
    pub fn points(&self) -> Vec<SweepPoint> {
        self.rows
            .iter()
            .filter(|r| r.status == CellStatus::Ok)
            .filter_map(|r| r.estimate.as_ref().map(|e| SweepPoint { n: r.n, q: r.q, rho: e.rho }))
            .collect()
    }

    pub fn get(&self, n: usize, q: f64) -> Option<&LyapunovEstimate> {
        self.rows.iter().find(|r| r.n == n && r.q == q).and_then(|r| r.estimate.as_ref())
    }

    fn write_rows(&self, cfg: &ExperimentConfig, s: &mut String) {
        s.push_str("size,n,q,rho,stderr,zero_hits,chains,steps,burn_in,seed,status\n");
        for r in &self.rows {
            match &r.estimate {
                Some(e) => {
                    let _ = writeln!(
                        s,
                        "{},{},{},{:.10e},{:.4e},{},{},{},{},{},{}",
                        r.size,
                        r.n,
                        r.q,
                        e.rho,
                        e.stderr,
                        e.zero_hits,
                        e.chains,
                        e.steps_per_chain,
                        e.burn_in,
                        cfg.seed,
                        r.status.label()
                    );
                }
                None => {
                    let _ = writeln!(s, "{},{},{},,,,,,,{},{}", r.size, r.n, r.q, cfg.seed, r.status.label());
                }
            }
        }
    }

    pub fn to_csv(&self, cfg: &ExperimentConfig) -> Result<String> {
        let mut s = cfg.header()?;
        self.write_rows(cfg, &mut s);
        Ok(s)
    }
}

/// Lyapunov spectral radius of the fault-prone cycle on the finest level
/// for every `(size, q)` cell.
pub fn run_lyapunov_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &size in &cfg.size_grid {
        let g = match cfg.hierarchy(size) {
            Ok(g) => g,
            Err(e) => {
                for &q in &cfg.q_grid {
                    rows.push(SweepRow { size, n: 0, q, estimate: None, status: CellStatus::Skipped(e.to_string()) });
                }
                continue;
            }
        };
        let mg = Multigrid::new(&g, cfg.cycle)?;
        let top = g.finest();
        let n = g.level(top).n;
        for &q in &cfg.q_grid {
            let op = FaultyCycle { mg: &mg, level: top, faults: cfg.faults.with_rate(q) };
            let est = lyapunov_estimate(&op, &cfg.lyapunov, &mut cell_rng(cfg.seed, n, q))?;
            let status = if est.reliable() { CellStatus::Ok } else { CellStatus::Unreliable };
            rows.push(SweepRow { size, n, q, estimate: Some(est), status });
        }
    }
    Ok(SweepResult { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub sweep: SweepResult,
    pub fit: Option<ScalingFit>,
    pub expected: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl ScalingReport {
    pub fn summary(&self) -> String {
        match (&self.fit, &self.verdict) {
            (Some(f), v) => format!(
                "exponent {:.4} (expected {:.4} ± {}), residual {:.3e}, {} levels: {}",
                f.exponent,
                self.expected,
                self.tolerance,
                f.residual,
                f.levels_used,
                if *v == Verdict::Pass { "pass" } else { "fail" }
            ),
            (None, Verdict::Inconclusive(why)) => format!("inconclusive: {why}"),
            (None, _) => "no fit".into(),
        }
    }

    /// The sweep rows, then the contour crossings and the fit as comments.
    pub fn to_csv(&self, cfg: &ExperimentConfig) -> Result<String> {
        let mut s = cfg.header()?;
        self.sweep.write_rows(cfg, &mut s);
        if let Some(f) = &self.fit {
            for c in &f.contours {
                let _ = writeln!(s, "# contour level={} n={} q={:.10e}", c.level, c.n, c.q);
            }
        }
        let _ = writeln!(s, "# {}", self.summary());
        Ok(s)
    }
}

/// Sweep plus a fit of the size exponent of the degradation.
pub fn run_scaling_check(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    cfg.validate()?;
    let sweep = run_lyapunov_sweep(cfg)?;
    let expected = cfg.scaling.expected.unwrap_or_else(|| scaling_exponent(cfg.problem.dimension));
    let tolerance = cfg.scaling.tolerance;
    let (fit, verdict) = match fit_degradation_exponent(&sweep.points(), &cfg.scaling.levels) {
        Ok(f) => {
            let v = if (f.exponent - expected).abs() <= tolerance { Verdict::Pass } else { Verdict::Fail };
            (Some(f), v)
        }
        Err(Error::Inconclusive(why)) => (None, Verdict::Inconclusive(why)),
        Err(e) => return Err(e),
    };
    Ok(ScalingReport { sweep, fit, expected, tolerance, verdict })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermRow {
    pub size: usize,
    pub n: usize,
    pub q: f64,
    pub term: String,
    pub value: f64,
    pub bound: f64,
    /// `None` for warning rows.
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermTable {
    pub rows: Vec<TermRow>,
}

impl TermTable {
    pub fn to_csv(&self, cfg: &ExperimentConfig) -> Result<String> {
        let mut s = cfg.header()?;
        s.push_str("size,n,q,term,value,bound,slack,holds,seed\n");
        for r in &self.rows {
            match r.holds {
                Some(h) => {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{:.12e},{:.12e},{:.6e},{},{}",
                        r.size,
                        r.n,
                        r.q,
                        r.term,
                        r.value,
                        r.bound,
                        r.bound - r.value,
                        h,
                        cfg.seed
                    );
                }
                None => {
                    let _ = writeln!(s, "{},{},{},{},,,,,{}", r.size, r.n, r.q, r.term, cfg.seed);
                }
            }
        }
        Ok(s)
    }
}

fn warning_row(size: usize, n: usize, q: f64, e: &Error) -> TermRow {
    TermRow {
        size,
        n,
        q,
        term: format!("skipped: {}", sanitize(&e.to_string())),
        value: f64::NAN,
        bound: f64::NAN,
        holds: None,
    }
}

/// Norm estimates of the variance terms on the finest level.
pub fn run_term_diagnostics(cfg: &ExperimentConfig) -> Result<TermTable> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &size in &cfg.size_grid {
        let g = match cfg.hierarchy(size) {
            Ok(g) => g,
            Err(e) => {
                rows.extend(cfg.q_grid.iter().map(|&q| warning_row(size, 0, q, &e)));
                continue;
            }
        };
        let top = g.finest();
        let n = g.level(top).n;
        let mg = Multigrid::new(&g, cfg.cycle)?;
        for &q in &cfg.q_grid {
            let report = SecondMomentModel::assemble(&mg, top, &cfg.faults.with_rate(q))
                .and_then(|m| term_diagnostics(&m));
            match report {
                Ok(rep) => rows.extend(rep.rows.into_iter().map(|r| TermRow {
                    size,
                    n,
                    q,
                    holds: Some(r.holds()),
                    term: r.name,
                    value: r.value,
                    bound: r.bound,
                })),
                Err(e @ (Error::TooLarge { .. } | Error::KroneckerCap { .. } | Error::InvalidParameter(_))) => {
                    rows.push(warning_row(size, n, q, &e))
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(TermTable { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantRow {
    pub size: usize,
    pub level: usize,
    /// Unknowns on `level`.
    pub n: usize,
    pub constant: String,
    /// Smoothing count for `ν`-dependent constants.
    pub sweeps: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantTable {
    pub rows: Vec<ConstantRow>,
    pub warnings: Vec<String>,
}

impl ConstantTable {
    pub fn values(&self, constant: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.constant == constant).map(|r| r.value).collect()
    }

    /// `max / min` of a constant over all levels and sizes.
    pub fn spread(&self, constant: &str) -> f64 {
        let v = self.values(constant);
        let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
        hi / lo
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "C_A spread {:.4}, two-grid A-norm spread {:.4}",
            self.spread("approximation"),
            self.spread("two_grid_energy_norm")
        );
        for w in &self.warnings {
            s.push_str(&format!("\nwarning: {w}"));
        }
        s
    }

    pub fn to_csv(&self, cfg: &ExperimentConfig) -> Result<String> {
        let mut s = cfg.header()?;
        s.push_str("size,level,n,constant,sweeps,value,seed\n");
        for r in &self.rows {
            let nu = r.sweeps.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{},{},{:.12e},{}", r.size, r.level, r.n, r.constant, nu, r.value, cfg.seed);
        }
        for w in &self.warnings {
            let _ = writeln!(s, ",,,skipped: {},,,{}", sanitize(w), cfg.seed);
        }
        Ok(s)
    }
}

/// Smoothing, approximation and prolongation constants on every
/// dense-capable level above the coarsest.
pub fn run_assumption_constants(cfg: &ExperimentConfig) -> Result<ConstantTable> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &size in &cfg.size_grid {
        let g = match cfg.hierarchy(size) {
            Ok(g) => g,
            Err(e) => {
                warnings.push(format!("size {size}: {e}"));
                continue;
            }
        };
        let mg = Multigrid::new(&g, cfg.cycle)?;
        for level in 1..=g.finest() {
            let n = g.level(level).n;
            if n > DENSE_CAP {
                warnings.push(format!("size {size} level {level}: {n} unknowns exceed the dense cap {DENSE_CAP}"));
                continue;
            }
            let c = assumption_constants(&mg, level, cfg.max_sweeps)?;
            let mut push = |constant: &str, sweeps: Option<usize>, value: f64| {
                rows.push(ConstantRow { size, level, n, constant: constant.into(), sweeps, value })
            };
            for (k, v) in c.smoothing.iter().enumerate() {
                push("smoothing", Some(k + 1), *v);
            }
            for (k, v) in c.smoother_power_norms.iter().enumerate() {
                push("stability", Some(k + 1), *v);
            }
            push("approximation", None, c.approximation);
            push("smoother_energy_norm", None, c.smoother_energy_norm);
            push("prolongation_lower", None, c.prolongation_lower);
            push("prolongation_upper", None, c.prolongation_upper);
            push("two_grid_energy_norm", None, two_grid_energy_norm(&mg, level)?);
        }
    }
    Ok(ConstantTable { rows, warnings })
}

/// Writes the stiffness and transfer matrices of every configured size to
/// `dir/size_<L>/`.
pub fn export_matrices(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for &size in &cfg.size_grid {
        let g = cfg.hierarchy(size)?;
        out.extend(g.export_matrix_market(&dir.join(format!("size_{size}")))?);
    }
    Ok(out)
}
