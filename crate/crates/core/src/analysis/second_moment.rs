//! Closed-form and enumerated second moments `E[E⊗E]` of the fault-prone
//! two-grid error operator.

use std::fmt;

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::faults::{
    FaultRng, FaultSiteConfig, FaultSource, RandomFaults, ScriptedFaults, Site, ENUMERATION_CAP,
};
use crate::linalg::{
    kron, kron_square_left_mul, kron_square_right_mul, spectral_radius_with, DenseMatrix,
    DiagonalMatrix, EnergyKind, SparseMatrix, SpdRoots, SpectralOptions, DENSE_CAP,
};
use crate::solver::Multigrid;

/// Dense operators of the two-grid method on one level (exact solve one
/// level below).
#[derive(Debug, Clone)]
pub struct TwoGridFactors {
    pub a: DenseMatrix,
    pub a_coarse: DenseMatrix,
    pub a_coarse_inv: DenseMatrix,
    pub p: DenseMatrix,
    pub r: DenseMatrix,
    /// Damped Jacobi `N`.
    pub smoother: DenseMatrix,
    /// `I − P A_c⁻¹ R A`.
    pub coarse_correction: DenseMatrix,
    /// `I − N A`.
    pub smoothing: DenseMatrix,
}

impl TwoGridFactors {
    pub fn new(mg: &Multigrid, level: usize) -> Result<Self> {
        let g = mg.hierarchy();
        if level == 0 || level > g.finest() {
            return Err(Error::IndexOutOfRange { index: level, dim: g.levels.len() });
        }
        let n = g.level(level).n;
        if n > DENSE_CAP {
            return Err(Error::TooLarge { what: "dense two-grid factors", size: n, cap: DENSE_CAP });
        }
        let a = g.level(level).a_dense();
        let a_coarse = g.level(level - 1).a_dense();
        let a_coarse_inv = a_coarse
            .clone()
            .cholesky()
            .ok_or(Error::NotSpd { eigenvalue: f64::NAN })?
            .inverse();
        let p = g.prolongation_into(level).to_dense();
        let r = g.restriction_from(level).to_dense();
        let smoother = mg.smoother(level).to_dense();
        let id = DenseMatrix::identity(n, n);
        let coarse_correction = &id - &p * &a_coarse_inv * &r * &a;
        let smoothing = &id - &smoother * &a;
        Ok(Self { a, a_coarse, a_coarse_inv, p, r, smoother, coarse_correction, smoothing })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_coarse(&self) -> usize {
        self.a_coarse.nrows()
    }

    /// `(E^S)^post · E^CG · (E^S)^pre`.
    pub fn two_grid_matrix(&self, pre: usize, post: usize) -> DenseMatrix {
        let mut e = self.coarse_correction.clone();
        for _ in 0..pre {
            e = &e * &self.smoothing;
        }
        for _ in 0..post {
            e = &self.smoothing * &e;
        }
        e
    }
}

/// Mean factor and variance operator of the fault matrix at one site.
#[derive(Debug, Clone)]
pub struct SiteLaw {
    pub e: f64,
    /// `Var[X]` on the tensor space.
    pub var: SparseMatrix,
    /// Largest entry of `Var[X]`.
    pub max_covariance: f64,
}

impl SiteLaw {
    fn new(cfg: &FaultSiteConfig, site: Site, n: usize) -> Result<Self> {
        let spec = cfg.effective(site);
        let m = spec.moments();
        Ok(Self { e: m.e, var: spec.second_moment_operator(n)?, max_covariance: m.max_covariance() })
    }
}

#[derive(Debug, Clone)]
pub struct SiteLaws {
    pub smoother: SiteLaw,
    pub residual: SiteLaw,
    pub restriction: SiteLaw,
    pub prolongation: SiteLaw,
}

/// The variance contributions to the second moment, named by the sites
/// whose variance they carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarianceTerm {
    Prolongation,
    Restriction,
    Residual,
    ProlongationRestriction,
    ProlongationResidual,
    RestrictionResidual,
    ProlongationRestrictionResidual,
    Smoother,
}

impl VarianceTerm {
    pub const COARSE: [VarianceTerm; 7] = [
        Self::Prolongation,
        Self::Restriction,
        Self::Residual,
        Self::ProlongationRestriction,
        Self::ProlongationResidual,
        Self::RestrictionResidual,
        Self::ProlongationRestrictionResidual,
    ];

    pub fn sites(self) -> &'static [Site] {
        use Site::*;
        match self {
            Self::Prolongation => &[Prolongation],
            Self::Restriction => &[Restriction],
            Self::Residual => &[Residual],
            Self::ProlongationRestriction => &[Prolongation, Restriction],
            Self::ProlongationResidual => &[Prolongation, Residual],
            Self::RestrictionResidual => &[Restriction, Residual],
            Self::ProlongationRestrictionResidual => &[Prolongation, Restriction, Residual],
            Self::Smoother => &[Smoother],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Prolongation => "C(P)",
            Self::Restriction => "C(R)",
            Self::Residual => "C(rho)",
            Self::ProlongationRestriction => "C(P,R)",
            Self::ProlongationResidual => "C(P,rho)",
            Self::RestrictionResidual => "C(R,rho)",
            Self::ProlongationRestrictionResidual => "C(P,R,rho)",
            Self::Smoother => "C(S)",
        }
    }
}

impl fmt::Display for VarianceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A tensor-space matrix kept as `left · rightᵀ`; every variance term has
/// rank at most the number of nonzero covariances of one site.
#[derive(Debug, Clone)]
pub struct FactoredTerm {
    pub left: DenseMatrix,
    pub right: DenseMatrix,
}

impl FactoredTerm {
    pub fn rank_bound(&self) -> usize {
        self.left.ncols()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        &self.left * self.right.transpose()
    }

    pub fn is_zero(&self) -> bool {
        self.left.iter().all(|v| *v == 0.0) || self.right.iter().all(|v| *v == 0.0)
    }

    /// `‖left · rightᵀ‖₂` from the two Gram matrices.
    pub fn spectral_norm(&self) -> f64 {
        if self.left.ncols() == 0 {
            return 0.0;
        }
        let gu = self.left.transpose() * &self.left;
        let gw = self.right.transpose() * &self.right;
        let eig = SymmetricEigen::new(gu);
        let sqrt_diag = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let root = &eig.eigenvectors * DenseMatrix::from_diagonal(&sqrt_diag) * eig.eigenvectors.transpose();
        let m = &root * gw * &root;
        let m = (&m + m.transpose()) * 0.5;
        SymmetricEigen::new(m).eigenvalues.iter().fold(0.0f64, |a, v| a.max(*v)).sqrt()
    }

    /// Tensor energy norm, `‖S^⊗2 C T^⊗2‖₂` with `(S, T) = (A^½, A^-½)` or `(A, A⁻¹)`.
    pub fn energy_norm(&self, a: &DenseMatrix, roots: &SpdRoots, kind: EnergyKind) -> f64 {
        let (s, t) = match kind {
            EnergyKind::A => (&roots.sqrt, &roots.inv_sqrt),
            EnergyKind::A2 => (a, &roots.inverse),
        };
        FactoredTerm {
            left: kron_square_left_mul(s, &self.left),
            right: kron_square_left_mul(&t.transpose(), &self.right),
        }
        .spectral_norm()
    }
}

fn kron_vec(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() * y.len());
    for a in x {
        out.extend(y.iter().map(|b| a * b));
    }
    out
}

/// Factors of `scale · (L⊗L) V (M⊗M)` for a diagonal tensor-space `V`;
/// `left = None` stands for the identity.
fn sandwich(left: Option<&DenseMatrix>, var: &SparseMatrix, right: &DenseMatrix, scale: f64) -> FactoredTerm {
    let m = right.nrows();
    let out_dim = left.map_or(m, |l| l.nrows());
    let entries: Vec<(usize, f64)> = var.triplets().filter(|t| t.2 != 0.0).map(|(k, _, v)| (k, v)).collect();
    let mut lf = DenseMatrix::zeros(out_dim * out_dim, entries.len());
    let mut rf = DenseMatrix::zeros(right.ncols() * right.ncols(), entries.len());
    let rt = right.transpose();
    for (c, &(k, v)) in entries.iter().enumerate() {
        let (i, p) = (k / m, k % m);
        match left {
            Some(l) => {
                let col = kron_vec(l.column(i).as_slice(), l.column(p).as_slice());
                for (dst, src) in lf.column_mut(c).iter_mut().zip(col) {
                    *dst = scale * v * src;
                }
            }
            None => lf[(k, c)] = scale * v,
        }
        let col = kron_vec(rt.column(i).as_slice(), rt.column(p).as_slice());
        rf.column_mut(c).copy_from_slice(&col);
    }
    FactoredTerm { left: lf, right: rf }
}

/// The second moment of the two-grid error operator, kept in pieces.
#[derive(Debug, Clone)]
pub struct SecondMomentModel {
    pub factors: TwoGridFactors,
    pub pre_smooth: usize,
    pub post_smooth: usize,
    pub faults: FaultSiteConfig,
    pub laws: SiteLaws,
    /// `E[E^CG]`.
    pub mean_coarse_correction: DenseMatrix,
    /// `E[E^S]`.
    pub mean_smoothing: DenseMatrix,
    pub terms: Vec<(VarianceTerm, FactoredTerm)>,
}

impl SecondMomentModel {
    pub fn assemble(mg: &Multigrid, level: usize, faults: &FaultSiteConfig) -> Result<Self> {
        faults.validate()?;
        let f = TwoGridFactors::new(mg, level)?;
        let (n, nc) = (f.n(), f.n_coarse());
        if n * n > DENSE_CAP {
            return Err(Error::KroneckerCap { entries: n * n * n * n, cap: DENSE_CAP * DENSE_CAP });
        }
        let laws = SiteLaws {
            smoother: SiteLaw::new(faults, Site::Smoother, n)?,
            residual: SiteLaw::new(faults, Site::Residual, n)?,
            restriction: SiteLaw::new(faults, Site::Restriction, nc)?,
            prolongation: SiteLaw::new(faults, Site::Prolongation, n)?,
        };
        let (ep, er, erho, es) =
            (laws.prolongation.e, laws.restriction.e, laws.residual.e, laws.smoother.e);
        let id = DenseMatrix::identity(n, n);
        let mean_coarse_correction =
            &f.coarse_correction + (&id - &f.coarse_correction) * (1.0 - ep * er * erho);
        let mean_smoothing = &f.smoothing + (&id - &f.smoothing) * (1.0 - es);

        let pac = &f.p * &f.a_coarse_inv;
        let pacr = &pac * &f.r;
        let ra = &f.r * &f.a;
        let full = &pacr * &f.a;
        let na = &f.smoother * &f.a;
        let (vp, vr, vrho, vs) =
            (&laws.prolongation.var, &laws.restriction.var, &laws.residual.var, &laws.smoother.var);
        let at = f.a.transpose();

        let with_left_var = |v: &SparseMatrix, mut t: FactoredTerm| {
            t.left = v.mul_dense(&t.left);
            t
        };
        let restriction_residual = |scale: f64| {
            let mut t = sandwich(Some(&pac), vr, &f.r, scale);
            t.right = kron_square_left_mul(&at, &vrho.mul_dense(&t.right));
            t
        };
        let terms = vec![
            (VarianceTerm::Prolongation, sandwich(None, vp, &full, (er * erho).powi(2))),
            (VarianceTerm::Restriction, sandwich(Some(&pac), vr, &ra, (ep * erho).powi(2))),
            (VarianceTerm::Residual, sandwich(Some(&pacr), vrho, &f.a, (ep * er).powi(2))),
            (
                VarianceTerm::ProlongationRestriction,
                with_left_var(vp, sandwich(Some(&pac), vr, &ra, erho * erho)),
            ),
            (
                VarianceTerm::ProlongationResidual,
                with_left_var(vp, sandwich(Some(&pacr), vrho, &f.a, er * er)),
            ),
            (VarianceTerm::RestrictionResidual, restriction_residual(ep * ep)),
            (
                VarianceTerm::ProlongationRestrictionResidual,
                with_left_var(vp, restriction_residual(1.0)),
            ),
            (VarianceTerm::Smoother, sandwich(None, vs, &na, 1.0)),
        ];
        Ok(Self {
            factors: f,
            pre_smooth: mg.config().pre_smooth,
            post_smooth: mg.config().post_smooth,
            faults: *faults,
            laws,
            mean_coarse_correction,
            mean_smoothing,
            terms,
        })
    }

    pub fn term(&self, which: VarianceTerm) -> &FactoredTerm {
        &self.terms.iter().find(|t| t.0 == which).expect("all terms are built").1
    }

    /// `E[E^CG]⊗E[E^CG] + Σ C`.
    pub fn coarse_correction_second_moment(&self) -> Result<DenseMatrix> {
        let mut w = kron(&self.mean_coarse_correction, &self.mean_coarse_correction)?;
        for t in VarianceTerm::COARSE {
            let f = self.term(t);
            if f.rank_bound() > 0 {
                w += f.to_dense();
            }
        }
        Ok(w)
    }

    /// `E[E^S]⊗E[E^S] + C(S)`.
    pub fn smoother_second_moment(&self) -> Result<DenseMatrix> {
        Ok(kron(&self.mean_smoothing, &self.mean_smoothing)? + self.term(VarianceTerm::Smoother).to_dense())
    }

    /// `E[(E^TG)^⊗2]`.
    pub fn assembled(&self) -> Result<DenseMatrix> {
        let mut w = self.coarse_correction_second_moment()?;
        let s = self.term(VarianceTerm::Smoother);
        for _ in 0..self.pre_smooth {
            let mut next = kron_square_right_mul(&w, &self.mean_smoothing);
            if s.rank_bound() > 0 {
                next += (&w * &s.left) * s.right.transpose();
            }
            w = next;
        }
        for _ in 0..self.post_smooth {
            let mut next = kron_square_left_mul(&self.mean_smoothing, &w);
            if s.rank_bound() > 0 {
                next += &s.left * (s.right.transpose() * &w);
            }
            w = next;
        }
        Ok(w)
    }

    /// `E[E^TG]`.
    pub fn mean_two_grid(&self) -> DenseMatrix {
        let mut e = self.mean_coarse_correction.clone();
        for _ in 0..self.pre_smooth {
            e = &e * &self.mean_smoothing;
        }
        for _ in 0..self.post_smooth {
            e = &self.mean_smoothing * &e;
        }
        e
    }
}

/// Tensor dimension up to which the replica bound uses a dense eigensolver.
const REPLICA_DENSE_DIM: usize = 400;

/// `√ρ(E[E⊗E])`, an upper bound on the Lyapunov spectral radius.
pub fn replica_bound(model: &SecondMomentModel) -> Result<f64> {
    let m = model.assembled()?;
    let rho = if m.nrows() <= REPLICA_DENSE_DIM {
        spectral_radius_with(&m, &SpectralOptions::default())?
    } else {
        cone_power_iteration(&m, model.factors.n())?
    };
    Ok(rho.max(0.0).sqrt())
}

/// Dominant eigenvalue of an operator that maps PSD matrices (vectorized)
/// into PSD matrices, by power iteration from the identity.
fn cone_power_iteration(m: &DenseMatrix, n: usize) -> Result<f64> {
    let mut x = nalgebra::DVector::zeros(n * n);
    for i in 0..n {
        x[i * n + i] = 1.0 / (n as f64).sqrt();
    }
    let mut last = f64::NAN;
    let mut settled = 0;
    for _ in 0..50_000 {
        let y = m * &x;
        let g = y.norm();
        if g == 0.0 {
            return Ok(0.0);
        }
        x = y / g;
        if (g - last).abs() <= 1e-12 * g {
            settled += 1;
            if settled >= 5 {
                return Ok(g);
            }
        } else {
            settled = 0;
        }
        last = g;
    }
    Err(Error::NotConverged { iterations: 50_000, last })
}

/// Records the sequence of fault draws a cycle makes.
#[derive(Default)]
struct SiteProbe(Vec<(Site, usize)>);

impl FaultSource for SiteProbe {
    fn draw(&mut self, site: Site, n: usize) -> Option<DiagonalMatrix> {
        self.0.push((site, n));
        None
    }
}

/// `E[E⊗E]` by summing over every joint fault pattern of one cycle,
/// weighted by its probability. Only discrete fault kinds are supported.
pub fn enumerate_second_moment(mg: &Multigrid, level: usize, faults: &FaultSiteConfig) -> Result<DenseMatrix> {
    let n = mg.hierarchy().level(level).n;
    let mut probe = SiteProbe::default();
    mg.apply_error_operator(level, &vec![0.0; n], &mut probe)?;
    let per_draw = probe
        .0
        .iter()
        .map(|&(site, m)| faults.effective(site).enumerate(m))
        .collect::<Result<Vec<_>>>()?;
    let total = per_draw.iter().try_fold(1usize, |acc, p| {
        acc.checked_mul(p.len()).filter(|t| *t <= ENUMERATION_CAP)
    });
    let total = total.ok_or(Error::TooLarge {
        what: "joint fault pattern enumeration",
        size: usize::MAX,
        cap: ENUMERATION_CAP,
    })?;
    let mut sum = DenseMatrix::zeros(n * n, n * n);
    let mut idx = vec![0usize; per_draw.len()];
    for _ in 0..total {
        let p: f64 = per_draw.iter().zip(&idx).map(|(pats, &k)| pats[k].0).product();
        if p > 0.0 {
            let script = probe.0.iter().zip(per_draw.iter().zip(&idx)).map(|(&(site, _), (pats, &k))| {
                (site, Some(DiagonalMatrix::new(pats[k].1.clone())))
            });
            let e = mg.error_matrix(level, &mut ScriptedFaults::new(script))?;
            sum += kron(&e, &e)? * p;
        }
        for (k, pats) in idx.iter_mut().zip(&per_draw) {
            *k += 1;
            if *k < pats.len() {
                break;
            }
            *k = 0;
        }
    }
    Ok(sum)
}

/// Monte-Carlo mean of `E⊗E` over `samples` independent cycles.
pub fn sampled_second_moment(
    mg: &Multigrid,
    level: usize,
    faults: &FaultSiteConfig,
    samples: usize,
    rng: &mut FaultRng,
) -> Result<DenseMatrix> {
    let n = mg.hierarchy().level(level).n;
    let mut sum = DenseMatrix::zeros(n * n, n * n);
    for _ in 0..samples {
        let e = mg.error_matrix(level, &mut RandomFaults::new(*faults, &mut *rng))?;
        sum += kron(&e, &e)?;
    }
    Ok(sum / samples.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{lyapunov_estimate, FaultyCycle, LyapunovOptions};
    use crate::discretization::{Dimension, GridHierarchy};
    use crate::faults::{rng_stream, FaultSpec};
    use crate::linalg::spectral_radius;
    use crate::solver::CycleConfig;

    fn one_d(fine_cells: usize) -> GridHierarchy {
        GridHierarchy::two_grid(Dimension::One, fine_cells).unwrap()
    }

    #[test]
    fn fault_free_model_is_deterministic_square() {
        let g = one_d(8);
        let mg = Multigrid::new(&g, CycleConfig::default()).unwrap();
        let m = SecondMomentModel::assemble(&mg, 1, &FaultSiteConfig::none()).unwrap();
        let e = m.factors.two_grid_matrix(1, 1);
        let want = kron(&e, &e).unwrap();
        assert!((m.assembled().unwrap() - want).amax() < 1e-13);
        let rb = replica_bound(&m).unwrap();
        assert!((rb - spectral_radius(&e, 1e-12).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn matches_enumeration_all_sites() {
        let g = one_d(4);
        let mg = Multigrid::new(&g, CycleConfig::default()).unwrap();
        for q in [0.25, 0.5] {
            let cfg = FaultSiteConfig::uniform(FaultSpec::componentwise(q));
            let model = SecondMomentModel::assemble(&mg, 1, &cfg).unwrap().assembled().unwrap();
            let exact = enumerate_second_moment(&mg, 1, &cfg).unwrap();
            assert!((model - exact).amax() < 1e-12, "q={q}");
        }
    }

    #[test]
    fn matches_enumeration_mixed_sites_and_blocks() {
        let g = one_d(4);
        for cfg_cycle in [CycleConfig::with_smoothing(0, 1), CycleConfig::with_smoothing(2, 0)] {
            let mg = Multigrid::new(&g, cfg_cycle).unwrap();
            let mut cfg = FaultSiteConfig::none();
            cfg.smoother.spec = FaultSpec::componentwise(0.1);
            cfg.residual.spec = FaultSpec::Block { q: 0.3, block_size: 2 };
            cfg.restriction.spec = FaultSpec::componentwise(0.4);
            cfg.prolongation.spec = FaultSpec::Block { q: 0.2, block_size: 3 };
            let model = SecondMomentModel::assemble(&mg, 1, &cfg).unwrap().assembled().unwrap();
            let exact = enumerate_second_moment(&mg, 1, &cfg).unwrap();
            assert!((model - exact).amax() < 1e-12);
        }
    }

    #[test]
    fn silent_faults_match_sampling() {
        let g = one_d(4);
        let mg = Multigrid::new(&g, CycleConfig::default()).unwrap();
        let cfg = FaultSiteConfig::uniform(FaultSpec::Silent { q: 0.3, amplitude: 0.5 });
        let model = SecondMomentModel::assemble(&mg, 1, &cfg).unwrap().assembled().unwrap();
        let sampled = sampled_second_moment(&mg, 1, &cfg, 40_000, &mut rng_stream(21, 0)).unwrap();
        let scale = model.amax();
        assert!((model - sampled).amax() < 0.02 * scale);
        assert!(enumerate_second_moment(&mg, 1, &cfg).is_err());
    }

    #[test]
    fn smoother_factor_identity() {
        // E[(I − X N A)^⊗2] = E[I − X N A]^⊗2 + Var[X] (NA)^⊗2, by enumeration.
        let g = one_d(8);
        let mg = Multigrid::new(&g, CycleConfig::default()).unwrap();
        let spec = FaultSpec::componentwise(0.3);
        let mut cfg = FaultSiteConfig::none();
        cfg.smoother.spec = spec;
        let model = SecondMomentModel::assemble(&mg, 1, &cfg).unwrap();
        let f = &model.factors;
        let na = &f.smoother * &f.a;
        let n = f.n();
        let mut want = DenseMatrix::zeros(n * n, n * n);
        for (p, d) in spec.enumerate(n).unwrap() {
            let e = DenseMatrix::identity(n, n) - DiagonalMatrix::new(d).to_dense() * &na;
            want += kron(&e, &e).unwrap() * p;
        }
        assert!((model.smoother_second_moment().unwrap() - want).amax() < 1e-13);
    }

    #[test]
    fn protected_prolongation_zeroes_terms() {
        let g = one_d(8);
        let mg = Multigrid::new(&g, CycleConfig::default()).unwrap();
        let cfg = FaultSiteConfig::uniform(FaultSpec::componentwise(0.2)).protect(Site::Prolongation);
        let m = SecondMomentModel::assemble(&mg, 1, &cfg).unwrap();
        for t in [
            VarianceTerm::Prolongation,
            VarianceTerm::ProlongationRestriction,
            VarianceTerm::ProlongationResidual,
            VarianceTerm::ProlongationRestrictionResidual,
        ] {
            assert!(m.term(t).to_dense().iter().all(|v| *v == 0.0), "{t}");
        }
        assert!(!m.term(VarianceTerm::Restriction).is_zero());
    }

    #[test]
    fn factored_norms_match_dense() {
        let g = one_d(8);
        let mg = Multigrid::new(&g, CycleConfig::default()).unwrap();
        let cfg = FaultSiteConfig::uniform(FaultSpec::componentwise(0.2));
        let m = SecondMomentModel::assemble(&mg, 1, &cfg).unwrap();
        let a = &m.factors.a;
        let roots = SpdRoots::new(a).unwrap();
        for (t, f) in &m.terms {
            let dense = f.to_dense();
            let want = crate::linalg::spectral_norm(&dense, 1e-12).unwrap();
            assert!((f.spectral_norm() - want).abs() < 1e-9 * want.max(1.0), "{t}");
            for kind in [EnergyKind::A, EnergyKind::A2] {
                let want = crate::linalg::tensor_energy_norm(&dense, a, &roots, kind, &SpectralOptions::default())
                    .unwrap();
                let got = f.energy_norm(a, &roots, kind);
                assert!((got - want).abs() < 1e-8 * want.max(1.0), "{t} {kind:?}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn everything_faulted_without_smoothing_is_identity() {
        let g = one_d(8);
        let mg = Multigrid::new(&g, CycleConfig::with_smoothing(0, 0)).unwrap();
        let cfg = FaultSiteConfig::uniform(FaultSpec::componentwise(1.0));
        let m = SecondMomentModel::assemble(&mg, 1, &cfg).unwrap();
        assert!((replica_bound(&m).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn replica_bounds_lyapunov_and_is_monotone() {
        let g = one_d(8);
        let mg = Multigrid::new(&g, CycleConfig::default()).unwrap();
        let mut last = 0.0;
        for k in 0..=5 {
            let q = 0.1 * k as f64;
            let cfg = FaultSiteConfig::uniform(FaultSpec::componentwise(q));
            let rb = replica_bound(&SecondMomentModel::assemble(&mg, 1, &cfg).unwrap()).unwrap();
            assert!(rb >= last - 1e-12, "q={q}: {rb} < {last}");
            last = rb;
            let op = FaultyCycle { mg: &mg, level: 1, faults: cfg };
            let est = lyapunov_estimate(&op, &LyapunovOptions::default(), &mut rng_stream(k, 0)).unwrap();
            assert!(est.rho <= rb + 3.0 * est.stderr, "q={q}: {} > {rb}", est.rho);
        }
    }

    #[test]
    fn cyclic_smoothing_splits_agree_with_protected_prolongation() {
        let g = one_d(8);
        let cfg = FaultSiteConfig::uniform(FaultSpec::componentwise(0.2)).protect(Site::Prolongation);
        let bound = |pre, post| {
            let mg = Multigrid::new(&g, CycleConfig::with_smoothing(pre, post)).unwrap();
            replica_bound(&SecondMomentModel::assemble(&mg, 1, &cfg).unwrap()).unwrap()
        };
        let (split, merged) = (bound(1, 1), bound(2, 0));
        assert!((split - merged).abs() < 1e-8 * merged, "{split} vs {merged}");
    }

    #[test]
    fn cone_iteration_matches_dense_radius() {
        let g = one_d(8);
        let mg = Multigrid::new(&g, CycleConfig::default()).unwrap();
        let cfg = FaultSiteConfig::uniform(FaultSpec::componentwise(0.3));
        let m = SecondMomentModel::assemble(&mg, 1, &cfg).unwrap();
        let w = m.assembled().unwrap();
        let dense = spectral_radius(&w, 1e-12).unwrap();
        let cone = cone_power_iteration(&w, m.factors.n()).unwrap();
        assert!((dense - cone).abs() < 1e-8 * dense);
    }
}
