//! Random diagonal fault matrices.
//!
//! A fault on a vector `x` replaces it by `X x` for a random diagonal `X`.
//! Hard faults zero the affected entries (the lost value is replaced by
//! zero and the computation continues); silent faults perturb them by a
//! bounded relative error.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DiagonalMatrix, SparseMatrix, KRON_ENTRY_CAP};

/// Cap on exhaustively enumerated fault patterns.
pub const ENUMERATION_CAP: usize = 1 << 20;

/// Counter-based stream generator used for every random draw.
pub type FaultRng = ChaCha8Rng;

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> FaultRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Distribution of one random diagonal matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultSpec {
    #[default]
    None,
    /// Independent entries, each zero with probability `q`.
    Componentwise { q: f64 },
    /// Contiguous blocks of `block_size` indices fail together with probability `q`.
    Block { q: f64, block_size: usize },
    /// Entries `1 + ε_i χ_i`, `ε_i` uniform on `[-amplitude, amplitude]` and
    /// `χ_i` zero with probability `q`.
    Silent { q: f64, amplitude: f64 },
}

/// Covariance pattern of the diagonal entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceStructure {
    Zero,
    IidDiagonal { v: f64 },
    BlockDiagonal { v: f64, block_size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultMoments {
    /// `E[X] = e·I`.
    pub e: f64,
    pub variance: VarianceStructure,
}

impl FaultMoments {
    /// `max_{i,j} |Cov(X_ii, X_jj)|`.
    pub fn max_covariance(&self) -> f64 {
        match self.variance {
            VarianceStructure::Zero => 0.0,
            VarianceStructure::IidDiagonal { v } | VarianceStructure::BlockDiagonal { v, .. } => v,
        }
    }

    /// Smallest `ε` with `|e − 1| ≤ ε` and `max |Cov| ≤ ε`.
    pub fn epsilon(&self) -> f64 {
        (self.e - 1.0).abs().max(self.max_covariance())
    }
}

impl FaultSpec {
    pub fn componentwise(q: f64) -> Self {
        Self::Componentwise { q }
    }

    pub fn validate(&self) -> Result<()> {
        let check_q = |q: f64| {
            if (0.0..=1.0).contains(&q) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("fault rate {q} outside [0, 1]")))
            }
        };
        match *self {
            Self::None => Ok(()),
            Self::Componentwise { q } => check_q(q),
            Self::Block { q, block_size } => {
                check_q(q)?;
                if block_size == 0 {
                    return Err(Error::InvalidParameter("block_size must be ≥ 1".into()));
                }
                Ok(())
            }
            Self::Silent { q, amplitude } => {
                check_q(q)?;
                if !(amplitude >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "silent amplitude {amplitude} must be ≥ 0"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn rate(&self) -> f64 {
        match *self {
            Self::None => 0.0,
            Self::Componentwise { q } | Self::Block { q, .. } | Self::Silent { q, .. } => q,
        }
    }

    /// Same kind with rate `q`; `None` stays `None`.
    pub fn with_rate(&self, q: f64) -> Self {
        match *self {
            Self::None => Self::None,
            Self::Componentwise { .. } => Self::Componentwise { q },
            Self::Block { block_size, .. } => Self::Block { q, block_size },
            Self::Silent { amplitude, .. } => Self::Silent { q, amplitude },
        }
    }

    /// True when every realization is the identity.
    pub fn is_trivial(&self) -> bool {
        match *self {
            Self::None => true,
            Self::Componentwise { q } | Self::Block { q, .. } => q == 0.0,
            Self::Silent { q, amplitude } => q == 1.0 || amplitude == 0.0,
        }
    }

    /// Writes one realization of the diagonal into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, out: &mut [f64], rng: &mut R) {
        match *self {
            Self::None => out.fill(1.0),
            Self::Componentwise { q } => {
                for v in out.iter_mut() {
                    *v = if rng.random::<f64>() < q { 0.0 } else { 1.0 };
                }
            }
            Self::Block { q, block_size } => {
                for chunk in out.chunks_mut(block_size) {
                    let v = if rng.random::<f64>() < q { 0.0 } else { 1.0 };
                    chunk.fill(v);
                }
            }
            Self::Silent { q, amplitude } => {
                for v in out.iter_mut() {
                    let chi = if rng.random::<f64>() < q { 0.0 } else { 1.0 };
                    let eps = amplitude * (2.0 * rng.random::<f64>() - 1.0);
                    *v = 1.0 + eps * chi;
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> DiagonalMatrix {
        let mut d = vec![0.0; n];
        self.sample_into(&mut d, rng);
        DiagonalMatrix::new(d)
    }

    pub fn moments(&self) -> FaultMoments {
        match *self {
            Self::None => FaultMoments {
                e: 1.0,
                variance: VarianceStructure::Zero,
            },
            Self::Componentwise { q } => FaultMoments {
                e: 1.0 - q,
                variance: if q == 0.0 || q == 1.0 {
                    VarianceStructure::Zero
                } else {
                    VarianceStructure::IidDiagonal { v: q * (1.0 - q) }
                },
            },
            Self::Block { q, block_size } => FaultMoments {
                e: 1.0 - q,
                variance: if q == 0.0 || q == 1.0 {
                    VarianceStructure::Zero
                } else {
                    VarianceStructure::BlockDiagonal {
                        v: q * (1.0 - q),
                        block_size,
                    }
                },
            },
            Self::Silent { q, amplitude } => {
                let v = (1.0 - q) * amplitude * amplitude / 3.0;
                FaultMoments {
                    e: 1.0,
                    variance: if v == 0.0 {
                        VarianceStructure::Zero
                    } else {
                        VarianceStructure::IidDiagonal { v }
                    },
                }
            }
        }
    }

    /// `Var[X] = E[X⊗X] − E[X]⊗E[X]` as an `n² × n²` sparse matrix.
    ///
    /// For a diagonal `X` only the entries `(i·n + p, i·n + p)` can be
    /// nonzero, holding `Cov(X_ii, X_pp)`.
    pub fn second_moment_operator(&self, n: usize) -> Result<SparseMatrix> {
        let moments = self.moments();
        let mut diag_entries = Vec::new();
        match moments.variance {
            VarianceStructure::Zero => {}
            VarianceStructure::IidDiagonal { v } => {
                diag_entries.extend((0..n).map(|i| (i * n + i, v)));
            }
            VarianceStructure::BlockDiagonal { v, block_size } => {
                if n.saturating_mul(block_size) > KRON_ENTRY_CAP {
                    return Err(Error::KroneckerCap {
                        entries: n * block_size,
                        cap: KRON_ENTRY_CAP,
                    });
                }
                for i in 0..n {
                    let start = (i / block_size) * block_size;
                    let end = (start + block_size).min(n);
                    diag_entries.extend((start..end).map(|p| (i * n + p, v)));
                }
            }
        }
        let nn = n
            .checked_mul(n)
            .ok_or_else(|| Error::KroneckerCap { entries: usize::MAX, cap: KRON_ENTRY_CAP })?;
        let triplets: Vec<_> = diag_entries.into_iter().map(|(k, v)| (k, k, v)).collect();
        SparseMatrix::from_triplets(nn, nn, &triplets)
    }

    /// Every realization with its probability, for the discrete kinds.
    pub fn enumerate(&self, n: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let (q, groups): (f64, Vec<(usize, usize)>) = match *self {
            Self::None => return Ok(vec![(1.0, vec![1.0; n])]),
            Self::Componentwise { q } => (q, (0..n).map(|i| (i, i + 1)).collect()),
            Self::Block { q, block_size } => (
                q,
                (0..n)
                    .step_by(block_size)
                    .map(|s| (s, (s + block_size).min(n)))
                    .collect(),
            ),
            Self::Silent { .. } => {
                return Err(Error::InvalidParameter(
                    "silent faults have a continuous law and cannot be enumerated".into(),
                ))
            }
        };
        let k = groups.len();
        if k >= 64 || (1usize << k) > ENUMERATION_CAP {
            return Err(Error::TooLarge {
                what: "fault pattern enumeration",
                size: k,
                cap: ENUMERATION_CAP.trailing_zeros() as usize,
            });
        }
        let mut out = Vec::with_capacity(1 << k);
        for mask in 0u64..(1u64 << k) {
            let mut d = vec![1.0; n];
            let mut p = 1.0;
            for (g, &(lo, hi)) in groups.iter().enumerate() {
                if mask >> g & 1 == 1 {
                    d[lo..hi].fill(0.0);
                    p *= q;
                } else {
                    p *= 1.0 - q;
                }
            }
            out.push((p, d));
        }
        Ok(out)
    }
}

/// Places in a multigrid cycle where a fault can strike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Site {
    /// Combined residual and `N`-application faults inside one smoothing step.
    Smoother,
    /// Residual before restriction.
    Residual,
    /// Output of the restriction (coarse-sized).
    Restriction,
    /// Output of the prolongation.
    Prolongation,
}

impl Site {
    pub const ALL: [Site; 4] = [Site::Smoother, Site::Residual, Site::Restriction, Site::Prolongation];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SiteFaults {
    pub spec: FaultSpec,
    pub protected: bool,
}

/// Per-site fault laws. All sites are mutually independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FaultSiteConfig {
    pub smoother: SiteFaults,
    pub residual: SiteFaults,
    pub restriction: SiteFaults,
    pub prolongation: SiteFaults,
}

impl FaultSiteConfig {
    pub fn none() -> Self {
        Self::default()
    }

    /// The same law at every site, nothing protected.
    pub fn uniform(spec: FaultSpec) -> Self {
        let s = SiteFaults {
            spec,
            protected: false,
        };
        Self {
            smoother: s,
            residual: s,
            restriction: s,
            prolongation: s,
        }
    }

    pub fn site(&self, site: Site) -> &SiteFaults {
        match site {
            Site::Smoother => &self.smoother,
            Site::Residual => &self.residual,
            Site::Restriction => &self.restriction,
            Site::Prolongation => &self.prolongation,
        }
    }

    pub fn site_mut(&mut self, site: Site) -> &mut SiteFaults {
        match site {
            Site::Smoother => &mut self.smoother,
            Site::Residual => &mut self.residual,
            Site::Restriction => &mut self.restriction,
            Site::Prolongation => &mut self.prolongation,
        }
    }

    pub fn protect(mut self, site: Site) -> Self {
        self.site_mut(site).protected = true;
        self
    }

    /// Law actually applied at `site`: `None` when protected.
    pub fn effective(&self, site: Site) -> FaultSpec {
        let s = self.site(site);
        if s.protected {
            FaultSpec::None
        } else {
            s.spec
        }
    }

    /// Replaces the rate at every site, keeping kinds and protection.
    pub fn with_rate(&self, q: f64) -> Self {
        let mut out = *self;
        for site in Site::ALL {
            let s = out.site_mut(site);
            s.spec = s.spec.with_rate(q);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        Site::ALL.iter().try_for_each(|&s| self.site(s).spec.validate())
    }

    pub fn is_fault_free(&self) -> bool {
        Site::ALL.iter().all(|&s| self.effective(s).is_trivial())
    }
}

/// Supplies fault realizations to the solver, one per site application.
pub trait FaultSource {
    /// Realization for one application of `site` to a vector of length `n`;
    /// `None` means the identity.
    fn draw(&mut self, site: Site, n: usize) -> Option<DiagonalMatrix>;
}

impl<S: FaultSource + ?Sized> FaultSource for &mut S {
    fn draw(&mut self, site: Site, n: usize) -> Option<DiagonalMatrix> {
        (**self).draw(site, n)
    }
}

/// Identity everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoFaults;

impl FaultSource for NoFaults {
    fn draw(&mut self, _site: Site, _n: usize) -> Option<DiagonalMatrix> {
        None
    }
}

/// Fresh independent realizations from a seeded stream.
#[derive(Debug, Clone)]
pub struct RandomFaults<R = FaultRng> {
    config: FaultSiteConfig,
    rng: R,
}

impl<R: Rng> RandomFaults<R> {
    pub fn new(config: FaultSiteConfig, rng: R) -> Self {
        Self { config, rng }
    }

    pub fn config(&self) -> &FaultSiteConfig {
        &self.config
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }
}

impl<R: Rng> FaultSource for RandomFaults<R> {
    fn draw(&mut self, site: Site, n: usize) -> Option<DiagonalMatrix> {
        let spec = self.config.effective(site);
        if spec.is_trivial() {
            return None;
        }
        Some(spec.sample(n, &mut self.rng))
    }
}

/// Replays a fixed sequence of realizations; panics if the solver asks for
/// a different site than scripted.
#[derive(Debug, Clone, Default)]
pub struct ScriptedFaults {
    queue: VecDeque<(Site, Option<DiagonalMatrix>)>,
}

impl ScriptedFaults {
    pub fn new(draws: impl IntoIterator<Item = (Site, Option<DiagonalMatrix>)>) -> Self {
        Self {
            queue: draws.into_iter().collect(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.queue.len()
    }
}

impl FaultSource for ScriptedFaults {
    fn draw(&mut self, site: Site, n: usize) -> Option<DiagonalMatrix> {
        let (s, d) = self
            .queue
            .pop_front()
            .unwrap_or_else(|| panic!("script exhausted at {site:?}"));
        assert_eq!(s, site, "scripted fault site out of order");
        if let Some(d) = &d {
            assert_eq!(d.dim(), n, "scripted fault dimension for {site:?}");
        }
        d
    }
}

/// Wraps a source and keeps every realization it hands out.
#[derive(Debug, Clone)]
pub struct RecordingFaults<S> {
    pub inner: S,
    pub log: Vec<(Site, Option<DiagonalMatrix>)>,
}

impl<S: FaultSource> RecordingFaults<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            log: Vec::new(),
        }
    }

    pub fn replay(&self) -> ScriptedFaults {
        ScriptedFaults::new(self.log.iter().cloned())
    }
}

impl<S: FaultSource> FaultSource for RecordingFaults<S> {
    fn draw(&mut self, site: Site, n: usize) -> Option<DiagonalMatrix> {
        let d = self.inner.draw(site, n);
        self.log.push((site, d.clone()));
        d
    }
}
