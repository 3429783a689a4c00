//! Numerical checks of the intermediate norm estimates on the variance
//! terms, and of the standard multigrid assumptions.

use std::io::Write;

use crate::error::{Error, Result};
use crate::faults::{FaultSpec, Site};
use crate::linalg::{
    hadamard_power, spectral_norm, spectral_radius, DenseMatrix, EnergyKind, SpdRoots, DEFAULT_TOL,
};
use crate::solver::Multigrid;

use super::second_moment::{SecondMomentModel, TwoGridFactors, VarianceTerm};

/// Relative slack allowed for rounding when checking `value ≤ bound`.
const ROUNDING: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub name: String,
    pub value: f64,
    pub bound: f64,
}

impl DiagnosticRow {
    fn new(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound }
    }

    pub fn slack(&self) -> f64 {
        self.bound - self.value
    }

    pub fn holds(&self) -> bool {
        self.value <= self.bound + ROUNDING * self.bound.abs().max(1e-300) + 1e-14
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticReport {
    pub rows: Vec<DiagnosticRow>,
}

impl DiagnosticReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(DiagnosticRow::holds)
    }

    pub fn violations(&self) -> Vec<&DiagnosticRow> {
        self.rows.iter().filter(|r| !r.holds()).collect()
    }

    pub fn row(&self, name: &str) -> Option<&DiagnosticRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// `term,value,bound,slack,holds` rows without a header.
    pub fn write_csv_rows<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.rows {
            writeln!(out, "{},{:.12e},{:.12e},{:.6e},{}", r.name, r.value, r.bound, r.slack(), r.holds())?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let bad = self.violations();
        let mut s = format!("{} inequalities, {} violated\n", self.rows.len(), bad.len());
        for r in bad {
            s.push_str(&format!("  {}: {} > {}\n", r.name, r.value, r.bound));
        }
        s
    }
}

/// Normalization of a site's variance term: the coefficient `s` with
/// `Var[X] = (1 − q)·s·K` (componentwise `s = q`, silent `s = ε²/3`).
fn variance_scale(spec: FaultSpec) -> Result<f64> {
    let s = match spec {
        FaultSpec::None => 1.0,
        FaultSpec::Componentwise { q } => q,
        FaultSpec::Silent { amplitude, .. } => amplitude * amplitude / 3.0,
        FaultSpec::Block { .. } => {
            return Err(Error::InvalidParameter(
                "term diagnostics need independent entries; block faults couple them".into(),
            ))
        }
    };
    Ok(if s > 0.0 { s } else { 1.0 })
}

fn norm(m: &DenseMatrix) -> Result<f64> {
    spectral_norm(m, DEFAULT_TOL)
}

fn max_column_norm(m: &DenseMatrix) -> f64 {
    m.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Energy-norm estimates on every variance term, each normalized by the
/// variance scales of its sites, plus the chain that bounds the Hadamard
/// powers by ordinary norms and Green's-function norms. When the
/// prolongation is protected, the `A²`-norm estimates are added.
pub fn term_diagnostics(model: &SecondMomentModel) -> Result<DiagnosticReport> {
    let f: &TwoGridFactors = &model.factors;
    let roots = SpdRoots::new(&f.a)?;
    let scale = |site: Site| variance_scale(model.faults.effective(site));
    let (sp, sr, srho, ss) =
        (scale(Site::Prolongation)?, scale(Site::Restriction)?, scale(Site::Residual)?, scale(Site::Smoother)?);
    let a_norm = |t: VarianceTerm| model.term(t).energy_norm(&f.a, &roots, EnergyKind::A);

    let pac = &f.p * &f.a_coarse_inv;
    let z = &pac * &f.r;
    let acr = &f.a_coarse_inv * &f.r;
    let na = &f.smoother * &f.a;
    let h2 = |m: &DenseMatrix| norm(&hadamard_power(m, 2));
    let a2 = h2(&f.a)?;
    let ac2 = h2(&f.a_coarse)?;
    let p2 = h2(&f.p)?;
    let r2 = h2(&f.r)?;
    let z2 = h2(&z)?;
    let aci2 = h2(&f.a_coarse_inv)?;
    let acr2 = h2(&acr)?;
    let na2 = h2(&na)?;

    let mut rows = Vec::new();
    let residual_value = a_norm(VarianceTerm::Residual) / srho;
    let residual_mid = spectral_radius(&(hadamard_power(&z, 2) * hadamard_power(&f.a, 2)), DEFAULT_TOL)?.sqrt();
    rows.push(DiagnosticRow::new("C(P)/s", a_norm(VarianceTerm::Prolongation) / sp, a2.sqrt() * z2.sqrt()));
    rows.push(DiagnosticRow::new("C(R)/s", a_norm(VarianceTerm::Restriction) / sr, ac2.sqrt() * aci2.sqrt()));
    rows.push(DiagnosticRow::new("C(rho)/s", residual_value, residual_mid));
    rows.push(DiagnosticRow::new("rho(Z°2 A°2)^1/2", residual_mid, z2.sqrt() * a2.sqrt()));
    rows.push(DiagnosticRow::new(
        "C(P,R)/s^2",
        a_norm(VarianceTerm::ProlongationRestriction) / (sp * sr),
        a2.sqrt() * ac2.sqrt() * acr2,
    ));
    rows.push(DiagnosticRow::new(
        "C(P,rho)/s^2",
        a_norm(VarianceTerm::ProlongationResidual) / (sp * srho),
        a2 * z2,
    ));
    rows.push(DiagnosticRow::new(
        "C(R,rho)/s^2",
        a_norm(VarianceTerm::RestrictionResidual) / (sr * srho),
        p2 * r2 * a2.sqrt() * aci2.sqrt(),
    ));
    rows.push(DiagnosticRow::new(
        "C(P,R,rho)/s^3",
        a_norm(VarianceTerm::ProlongationRestrictionResidual) / (sp * sr * srho),
        p2 * p2 * a2 * acr2,
    ));
    rows.push(DiagnosticRow::new("C(S)/s", a_norm(VarianceTerm::Smoother) / ss, na2));

    // Hadamard powers against ordinary norms and Green's functions.
    let p_norm = norm(&f.p)?;
    let a_op = norm(&f.a)?;
    let ac_op = norm(&f.a_coarse)?;
    let a_inv = &roots.inverse;
    let green = max_column_norm(a_inv);
    let green_coarse = max_column_norm(&f.a_coarse_inv);
    let z_cols = max_column_norm(&z);
    let za = norm(&(&z * &f.a))?;
    let acra = norm(&(&acr * &f.a))?;
    let pac_rows = max_column_norm(&pac);
    let acr_cols = max_column_norm(&acr);
    rows.push(DiagnosticRow::new("|P°2|", p2, p_norm * p_norm));
    rows.push(DiagnosticRow::new("|A°2|", a2, a_op * a_op));
    rows.push(DiagnosticRow::new("|Ac°2|", ac2, ac_op * ac_op));
    rows.push(DiagnosticRow::new("|Ac|^2", ac_op * ac_op, a_op * a_op));
    rows.push(DiagnosticRow::new("|Z°2|", z2, z_cols * z_cols));
    rows.push(DiagnosticRow::new("max|Z e_i|^2", z_cols * z_cols, za * za * green * green));
    rows.push(DiagnosticRow::new("|(Ac^-1 R)°2|", acr2, pac_rows * acr_cols));
    rows.push(DiagnosticRow::new(
        "max|P Ac^-1 e_i| max|Ac^-1 R e_j|",
        pac_rows * acr_cols,
        p_norm * green_coarse * acra * green,
    ));
    rows.push(DiagnosticRow::new("|(NA)°2|", na2, norm(&na)?.powi(2)));

    // First moments.
    let energy = |m: &DenseMatrix| crate::linalg::energy_norm_with(m, &f.a, &roots, EnergyKind::A);
    let n = f.n();
    let id = DenseMatrix::identity(n, n);
    let l = &model.laws;
    let e_cg = l.prolongation.e * l.restriction.e * l.residual.e;
    rows.push(DiagnosticRow::new(
        "|E[E^CG]|_A",
        energy(&model.mean_coarse_correction)?,
        energy(&f.coarse_correction)? + (1.0 - e_cg).abs() * energy(&(&id - &f.coarse_correction))?,
    ));
    rows.push(DiagnosticRow::new(
        "|E[E^S]|_A",
        energy(&model.mean_smoothing)?,
        energy(&f.smoothing)? + (1.0 - l.smoother.e).abs() * energy(&(&id - &f.smoothing))?,
    ));

    if model.faults.effective(Site::Prolongation) == FaultSpec::None {
        rows.extend(protected_prolongation_rows(model, &roots)?);
    }
    Ok(DiagnosticReport { rows })
}

/// `A²`-norm estimates used when the prolongation is fault-free.
fn protected_prolongation_rows(model: &SecondMomentModel, roots: &SpdRoots) -> Result<Vec<DiagnosticRow>> {
    let f = &model.factors;
    let l = &model.laws;
    let a2_norm = |t: VarianceTerm| model.term(t).energy_norm(&f.a, roots, EnergyKind::A2);
    let acra = norm(&(&f.a_coarse_inv * &f.r * &f.a))?;
    let r_norm = norm(&f.r)?;
    let za = norm(&(&f.p * &f.a_coarse_inv * &f.r * &f.a))?;
    let an = norm(&(&f.a * &f.smoother))?;
    let (vr, vrho, vs) = (l.restriction.max_covariance, l.residual.max_covariance, l.smoother.max_covariance);
    let n = f.n();
    let id = DenseMatrix::identity(n, n);
    Ok(vec![
        DiagnosticRow::new(
            "C(R)_A2",
            a2_norm(VarianceTerm::Restriction),
            vr * l.residual.e.powi(2) * acra * acra * r_norm * r_norm,
        ),
        DiagnosticRow::new("C(rho)_A2", a2_norm(VarianceTerm::Residual), vrho * l.restriction.e.powi(2) * za * za),
        DiagnosticRow::new(
            "C(R,rho)_A2",
            a2_norm(VarianceTerm::RestrictionResidual),
            vr * vrho * acra * acra * r_norm * r_norm,
        ),
        DiagnosticRow::new("C(S)_A2", a2_norm(VarianceTerm::Smoother), vs * an * an),
        DiagnosticRow::new(
            "|E[E^CG]|_A2",
            norm(&model.mean_coarse_correction)?,
            norm(&f.coarse_correction)?
                + (1.0 - l.restriction.e * l.residual.e).abs() * norm(&(&id - &f.coarse_correction))?,
        ),
        DiagnosticRow::new(
            "|E[E^S]|_A2",
            norm(&model.mean_smoothing)?,
            norm(&f.smoothing)? + (1.0 - l.smoother.e).abs() * norm(&(&id - &f.smoothing))?,
        ),
    ])
}

/// Measured constants of the smoothing, approximation, stability and
/// prolongation assumptions on one level.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionConstants {
    pub level: usize,
    pub n: usize,
    /// `η(ν) = ‖A (E^S)^ν‖ / ‖A‖` for `ν = 1..`.
    pub smoothing: Vec<f64>,
    /// `C_A = ‖E^CG A⁻¹‖ ‖A‖`.
    pub approximation: f64,
    /// `C_S(ν) = ‖(E^S)^ν‖` for `ν = 1..`.
    pub smoother_power_norms: Vec<f64>,
    /// `‖E^S‖_A`, which must not exceed 1.
    pub smoother_energy_norm: f64,
    /// `C̲_p = 1/σ_min(P)`.
    pub prolongation_lower: f64,
    /// `C̄_p = σ_max(P)`.
    pub prolongation_upper: f64,
}

pub fn assumption_constants(mg: &Multigrid, level: usize, max_sweeps: usize) -> Result<AssumptionConstants> {
    let f = TwoGridFactors::new(mg, level)?;
    let a_norm = norm(&f.a)?;
    let a_inv = f
        .a
        .clone()
        .cholesky()
        .ok_or(Error::NotSpd { eigenvalue: f64::NAN })?
        .inverse();
    let mut power = f.smoothing.clone();
    let mut smoothing = Vec::with_capacity(max_sweeps);
    let mut smoother_power_norms = Vec::with_capacity(max_sweeps);
    for _ in 0..max_sweeps {
        smoothing.push(norm(&(&f.a * &power))? / a_norm);
        smoother_power_norms.push(norm(&power)?);
        power = &power * &f.smoothing;
    }
    let sv = f.p.clone().svd(false, false).singular_values;
    let (smin, smax) = (sv.min(), sv.max());
    Ok(AssumptionConstants {
        level,
        n: f.n(),
        smoothing,
        approximation: norm(&(&f.coarse_correction * a_inv))? * a_norm,
        smoother_power_norms,
        smoother_energy_norm: crate::linalg::energy_norm(&f.smoothing, &f.a, EnergyKind::A)?,
        prolongation_lower: 1.0 / smin,
        prolongation_upper: smax,
    })
}

/// `‖E^TG‖_A` of the fault-free two-grid method.
pub fn two_grid_energy_norm(mg: &Multigrid, level: usize) -> Result<f64> {
    let f = TwoGridFactors::new(mg, level)?;
    let c = mg.config();
    crate::linalg::energy_norm(&f.two_grid_matrix(c.pre_smooth, c.post_smooth), &f.a, EnergyKind::A)
}
