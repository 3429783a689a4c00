//! Top Lyapunov exponent of i.i.d. random operator products.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faults::{FaultRng, FaultSiteConfig, FaultSpec, RandomFaults};
use crate::linalg::{norm2, LinearOperator};
use crate::solver::Multigrid;

/// A random linear map; each call to [`apply`](Self::apply) uses a fresh,
/// independent realization.
pub trait RandomOperator {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[f64], rng: &mut FaultRng) -> Vec<f64>;
}

/// A deterministic operator seen as a (degenerate) random one.
pub struct FixedOperator<'a, O: LinearOperator + ?Sized>(pub &'a O);

impl<O: LinearOperator + ?Sized> RandomOperator for FixedOperator<'_, O> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, v: &[f64], _rng: &mut FaultRng) -> Vec<f64> {
        let mut out = vec![0.0; self.0.nrows()];
        self.0.apply(v, &mut out);
        out
    }
}

/// Error propagation of one fault-prone cycle on `level`.
pub struct FaultyCycle<'a> {
    pub mg: &'a Multigrid<'a>,
    pub level: usize,
    pub faults: FaultSiteConfig,
}

impl RandomOperator for FaultyCycle<'_> {
    fn dim(&self) -> usize {
        self.mg.hierarchy().level(self.level).n
    }

    fn apply(&self, v: &[f64], rng: &mut FaultRng) -> Vec<f64> {
        let mut src = RandomFaults::new(self.faults, rng);
        self.mg
            .apply_error_operator(self.level, v, &mut src)
            .expect("dimension checked by dim()")
    }
}

/// `sweeps` faulty smoothing steps with zero right-hand side.
pub struct FaultySmoother<'a> {
    pub mg: &'a Multigrid<'a>,
    pub level: usize,
    pub spec: FaultSpec,
    pub sweeps: usize,
}

impl RandomOperator for FaultySmoother<'_> {
    fn dim(&self) -> usize {
        self.mg.hierarchy().level(self.level).n
    }

    fn apply(&self, v: &[f64], rng: &mut FaultRng) -> Vec<f64> {
        let mut cfg = FaultSiteConfig::none();
        cfg.smoother.spec = self.spec;
        let mut src = RandomFaults::new(cfg, rng);
        let b = vec![0.0; v.len()];
        let mut x = v.to_vec();
        for _ in 0..self.sweeps {
            self.mg
                .smooth(self.level, &b, &mut x, &mut src)
                .expect("dimension checked by dim()");
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovOptions {
    pub chains: usize,
    pub steps: usize,
    pub burn_in: usize,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self {
            chains: 10,
            steps: 1000,
            burn_in: 50,
        }
    }
}

impl LyapunovOptions {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::InvalidParameter("need at least one chain".into()));
        }
        if self.steps <= self.burn_in {
            return Err(Error::InvalidParameter(format!(
                "steps ({}) must exceed burn_in ({})",
                self.steps, self.burn_in
            )));
        }
        Ok(())
    }
}

/// Fraction of steps that may end in the zero vector before the estimate
/// is flagged.
pub const ZERO_HIT_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate {
    pub rho: f64,
    pub stderr: f64,
    pub chains: usize,
    pub steps_per_chain: usize,
    pub burn_in: usize,
    pub zero_hits: usize,
    /// Mean log growth of each chain.
    pub chain_log_growth: Vec<f64>,
}

impl LyapunovEstimate {
    pub fn reliable(&self) -> bool {
        (self.zero_hits as f64) <= ZERO_HIT_LIMIT * (self.chains * self.steps_per_chain) as f64
    }

    /// The estimate, or an error when zero vectors dominated the run.
    pub fn checked(self) -> Result<Self> {
        if self.reliable() {
            Ok(self)
        } else {
            Err(Error::Unreliable(format!(
                "{} zero vectors in {} steps",
                self.zero_hits,
                self.chains * self.steps_per_chain
            )))
        }
    }
}

fn random_unit(n: usize, rng: &mut FaultRng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = norm2(&v);
        if s > 0.0 {
            return v.into_iter().map(|x| x / s).collect();
        }
    }
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / k;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

const BATCHES: usize = 10;

/// Renormalized power iteration with a fresh realization per step.
///
/// `rho` is `exp` of the mean log growth after burn-in. The standard error
/// comes from the spread across chains (batch means for a single chain),
/// mapped to `rho` by the delta method.
pub fn lyapunov_estimate<O: RandomOperator + ?Sized>(
    op: &O,
    opts: &LyapunovOptions,
    rng: &mut FaultRng,
) -> Result<LyapunovEstimate> {
    opts.validate()?;
    let n = op.dim();
    if n == 0 {
        return Err(Error::InvalidParameter("operator of dimension 0".into()));
    }
    let mut zero_hits = 0;
    let mut chain_log_growth = Vec::with_capacity(opts.chains);
    let mut batch_means = Vec::new();
    for _ in 0..opts.chains {
        let mut v = random_unit(n, rng);
        let mut logs = Vec::with_capacity(opts.steps - opts.burn_in);
        for step in 0..opts.steps {
            let w = op.apply(&v, rng);
            let g = norm2(&w);
            if g == 0.0 || !g.is_finite() {
                zero_hits += 1;
                v = random_unit(n, rng);
                continue;
            }
            if step >= opts.burn_in {
                logs.push(g.ln());
            }
            v = w.into_iter().map(|x| x / g).collect();
        }
        if logs.is_empty() {
            chain_log_growth.push(f64::NEG_INFINITY);
            continue;
        }
        chain_log_growth.push(logs.iter().sum::<f64>() / logs.len() as f64);
        if opts.chains == 1 {
            let size = (logs.len() / BATCHES).max(1);
            batch_means = logs
                .chunks(size)
                .filter(|c| c.len() == size)
                .map(|c| c.iter().sum::<f64>() / size as f64)
                .collect();
        }
    }
    let samples = if opts.chains == 1 { &batch_means } else { &chain_log_growth };
    let (mean_log, se_log) = if samples.iter().all(|s| s.is_finite()) {
        mean_and_stderr(samples)
    } else {
        (f64::NEG_INFINITY, 0.0)
    };
    let rho = mean_log.exp();
    Ok(LyapunovEstimate {
        rho,
        stderr: rho * se_log,
        chains: opts.chains,
        steps_per_chain: opts.steps,
        burn_in: opts.burn_in,
        zero_hits,
        chain_log_growth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{Dimension, GridHierarchy};
    use crate::faults::rng_stream;
    use crate::linalg::{spectral_radius, DenseMatrix};
    use crate::solver::CycleConfig;

    #[test]
    fn scaled_identity_is_exact() {
        let m = DenseMatrix::identity(4, 4) * 0.5;
        let est = lyapunov_estimate(&FixedOperator(&m), &LyapunovOptions::default(), &mut rng_stream(1, 0))
            .unwrap();
        assert!((est.rho - 0.5).abs() < 1e-14);
        assert!(est.stderr < 1e-14);
        assert_eq!(est.zero_hits, 0);
    }

    #[test]
    fn fixed_matrix_gives_spectral_radius() {
        // Eigenvalues 0.9, 0.5, 0.3, -0.2, 0.1 in a non-orthogonal basis.
        let d = DenseMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.9, 0.5, 0.3, -0.2, 0.1]));
        let mut rng = rng_stream(2, 0);
        let s = DenseMatrix::from_fn(5, 5, |i, j| if i == j { 2.0 } else { rng.random_range(-0.5..0.5) });
        let m = &s * d * s.clone().try_inverse().unwrap();
        let want = spectral_radius(&m, 1e-12).unwrap();
        let est = lyapunov_estimate(&FixedOperator(&m), &LyapunovOptions::default(), &mut rng).unwrap();
        assert!((est.rho - want).abs() < 1e-3, "{} vs {want}", est.rho);
    }

    #[test]
    fn zero_operator_is_flagged() {
        let m = DenseMatrix::zeros(3, 3);
        let opts = LyapunovOptions { chains: 2, steps: 20, burn_in: 0 };
        let est = lyapunov_estimate(&FixedOperator(&m), &opts, &mut rng_stream(3, 0)).unwrap();
        assert_eq!(est.zero_hits, 40);
        assert!(!est.reliable());
        assert!(est.checked().is_err());
        assert!(LyapunovOptions { chains: 1, steps: 5, burn_in: 5 }.validate().is_err());
    }

    #[test]
    fn short_and_long_runs_agree() {
        let g = GridHierarchy::build(Dimension::One, 1, 4).unwrap();
        let mg = Multigrid::new(&g, CycleConfig::default()).unwrap();
        let op = FaultyCycle {
            mg: &mg,
            level: 1,
            faults: FaultSiteConfig::uniform(FaultSpec::componentwise(0.2)),
        };
        let reference = lyapunov_estimate(
            &op,
            &LyapunovOptions { chains: 1, steps: 1_000_000, burn_in: 100 },
            &mut rng_stream(4, 0),
        )
        .unwrap();
        let est = lyapunov_estimate(&op, &LyapunovOptions::default(), &mut rng_stream(5, 0)).unwrap();
        assert!(est.reliable());
        let tol = 3.0 * (est.stderr.powi(2) + reference.stderr.powi(2)).sqrt();
        assert!((est.rho - reference.rho).abs() <= tol, "{est:?} vs {reference:?}");
    }

    #[test]
    fn single_chain_uses_batches() {
        let g = GridHierarchy::build(Dimension::One, 1, 4).unwrap();
        let mg = Multigrid::new(&g, CycleConfig::default()).unwrap();
        let op = FaultySmoother { mg: &mg, level: 1, spec: FaultSpec::componentwise(0.1), sweeps: 1 };
        let est = lyapunov_estimate(
            &op,
            &LyapunovOptions { chains: 1, steps: 2000, burn_in: 50 },
            &mut rng_stream(6, 0),
        )
        .unwrap();
        assert!(est.stderr > 0.0 && est.rho > 0.0 && est.rho < 1.0);
    }
}
