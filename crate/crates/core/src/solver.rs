//! Damped Jacobi smoothing and (fault-prone) multigrid cycles.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::discretization::GridHierarchy;
use crate::error::{Error, Result};
use crate::faults::{FaultSource, Site};
use crate::linalg::{norm2, BandCholesky, DenseMatrix, DiagonalMatrix};

/// Residual growth over the initial residual that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoarseSolver {
    /// Exact Cholesky factorization of the coarsest operator.
    #[default]
    DenseFactorization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleConfig {
    pub pre_smooth: usize,
    pub post_smooth: usize,
    /// Recursive coarse corrections per level (1 = V-cycle, 2 = W-cycle).
    pub coarse_corrections: usize,
    /// Jacobi damping factor.
    pub damping: f64,
    pub coarse_solver: CoarseSolver,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            pre_smooth: 1,
            post_smooth: 1,
            coarse_corrections: 1,
            damping: 2.0 / 3.0,
            coarse_solver: CoarseSolver::DenseFactorization,
        }
    }
}

impl CycleConfig {
    pub fn with_smoothing(pre_smooth: usize, post_smooth: usize) -> Self {
        Self {
            pre_smooth,
            post_smooth,
            ..Self::default()
        }
    }

    /// Checks the parameters a cycle can run with. Zero total smoothing is
    /// allowed here (the bare coarse-grid correction is a useful operator
    /// to analyse); [`CycleConfig::validate_solver`] rejects it.
    pub fn validate(&self) -> Result<()> {
        if self.coarse_corrections < 1 {
            return Err(Error::InvalidParameter("coarse_corrections must be ≥ 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "damping {} outside (0, 1]",
                self.damping
            )));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus at least one smoothing step.
    pub fn validate_solver(&self) -> Result<()> {
        self.validate()?;
        if self.pre_smooth + self.post_smooth == 0 {
            return Err(Error::InvalidParameter(
                "pre_smooth + post_smooth must be ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

/// Residual history of one solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationTrace {
    /// 2-norm of the residual; entry 0 is the initial residual.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
}

impl IterationTrace {
    pub fn relative(&self) -> Vec<f64> {
        let r0 = self.residual_norms.first().copied().unwrap_or(0.0);
        self.residual_norms
            .iter()
            .map(|r| if r0 > 0.0 { r / r0 } else { *r })
            .collect()
    }

    /// Rows `iteration,residual_norm` without a header.
    pub fn write_csv_rows<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, r) in self.residual_norms.iter().enumerate() {
            writeln!(out, "{k},{r:.12e}")?;
        }
        Ok(())
    }
}

/// A multigrid solver bound to a hierarchy.
#[derive(Debug, Clone)]
pub struct Multigrid<'h> {
    hierarchy: &'h GridHierarchy,
    cfg: CycleConfig,
    smoothers: Vec<DiagonalMatrix>,
    coarse: BandCholesky,
}

impl<'h> Multigrid<'h> {
    pub fn new(hierarchy: &'h GridHierarchy, cfg: CycleConfig) -> Result<Self> {
        cfg.validate()?;
        let smoothers = hierarchy
            .levels
            .iter()
            .map(|lv| {
                let d = lv.a.diagonal();
                if let Some(&bad) = d.iter().find(|v| **v <= 0.0) {
                    return Err(Error::NotSpd { eigenvalue: bad });
                }
                Ok(DiagonalMatrix::new(
                    d.into_iter().map(|v| cfg.damping / v).collect(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let coarse = BandCholesky::factor(&hierarchy.level(0).a)?;
        Ok(Self {
            hierarchy,
            cfg,
            smoothers,
            coarse,
        })
    }

    pub fn hierarchy(&self) -> &'h GridHierarchy {
        self.hierarchy
    }

    pub fn config(&self) -> &CycleConfig {
        &self.cfg
    }

    /// `N_ℓ = θ D_ℓ⁻¹`.
    pub fn smoother(&self, level: usize) -> &DiagonalMatrix {
        &self.smoothers[level]
    }

    fn check_len(&self, level: usize, v: &[f64], context: &'static str) -> Result<()> {
        let n = self
            .hierarchy
            .levels
            .get(level)
            .ok_or(Error::IndexOutOfRange {
                index: level,
                dim: self.hierarchy.levels.len(),
            })?
            .n;
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                context,
                expected: n,
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// One smoothing step `x ← x + X N (b − A x)` in place.
    pub fn smooth(
        &self,
        level: usize,
        b: &[f64],
        x: &mut [f64],
        faults: &mut dyn FaultSource,
    ) -> Result<()> {
        self.check_len(level, b, "smoother rhs")?;
        self.check_len(level, x, "smoother iterate")?;
        self.smooth_unchecked(level, b, x, faults);
        Ok(())
    }

    fn smooth_unchecked(&self, level: usize, b: &[f64], x: &mut [f64], faults: &mut dyn FaultSource) {
        let lv = self.hierarchy.level(level);
        let mut r = vec![0.0; lv.n];
        lv.a.spmv_into(x, &mut r);
        let nd = self.smoothers[level].diag();
        for i in 0..lv.n {
            r[i] = nd[i] * (b[i] - r[i]);
        }
        if let Some(xs) = faults.draw(Site::Smoother, lv.n) {
            xs.apply_in_place(&mut r);
        }
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi += ri;
        }
    }

    /// One cycle `x ← MG_ℓ(b, x)` in place.
    pub fn mg_iterate(
        &self,
        level: usize,
        b: &[f64],
        x: &mut [f64],
        faults: &mut dyn FaultSource,
    ) -> Result<()> {
        self.check_len(level, b, "cycle rhs")?;
        self.check_len(level, x, "cycle iterate")?;
        self.cycle(level, b, x, faults);
        Ok(())
    }

    fn cycle(&self, level: usize, b: &[f64], x: &mut [f64], faults: &mut dyn FaultSource) {
        if level == 0 {
            x.copy_from_slice(b);
            self.coarse.solve_in_place(x);
            return;
        }
        let lv = self.hierarchy.level(level);
        let coarse_n = self.hierarchy.level(level - 1).n;
        for _ in 0..self.cfg.pre_smooth {
            self.smooth_unchecked(level, b, x, faults);
        }

        let mut r = vec![0.0; lv.n];
        lv.a.spmv_into(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        if let Some(xr) = faults.draw(Site::Residual, lv.n) {
            xr.apply_in_place(&mut r);
        }
        let mut d = vec![0.0; coarse_n];
        self.hierarchy.restriction_from(level).spmv_into(&r, &mut d);
        if let Some(xr) = faults.draw(Site::Restriction, coarse_n) {
            xr.apply_in_place(&mut d);
        }

        let mut e = vec![0.0; coarse_n];
        for _ in 0..self.cfg.coarse_corrections {
            self.cycle(level - 1, &d, &mut e, faults);
        }

        let mut c = r;
        self.hierarchy.prolongation_into(level).spmv_into(&e, &mut c);
        if let Some(xp) = faults.draw(Site::Prolongation, lv.n) {
            xp.apply_in_place(&mut c);
        }
        for (xi, ci) in x.iter_mut().zip(&c) {
            *xi += ci;
        }

        for _ in 0..self.cfg.post_smooth {
            self.smooth_unchecked(level, b, x, faults);
        }
    }

    /// `E_ℓ v` for one joint fault realization: a cycle with `b = 0`.
    pub fn apply_error_operator(
        &self,
        level: usize,
        v: &[f64],
        faults: &mut dyn FaultSource,
    ) -> Result<Vec<f64>> {
        self.check_len(level, v, "error operator input")?;
        let mut x = v.to_vec();
        let b = vec![0.0; v.len()];
        self.cycle(level, &b, &mut x, faults);
        Ok(x)
    }

    /// Dense `E_ℓ` for one realization drawn from `faults`, assembled
    /// column by column with the realization replayed for every column.
    pub fn error_matrix(&self, level: usize, faults: &mut dyn FaultSource) -> Result<DenseMatrix> {
        use crate::faults::RecordingFaults;
        let n = self.hierarchy.level(level).n;
        let mut rec = RecordingFaults::new(faults);
        let mut unit = vec![0.0; n];
        unit[0] = 1.0;
        let first = self.apply_error_operator(level, &unit, &mut rec)?;
        let mut out = DenseMatrix::zeros(n, n);
        out.column_mut(0).copy_from_slice(&first);
        for j in 1..n {
            unit[j - 1] = 0.0;
            unit[j] = 1.0;
            let mut replay = rec.replay();
            let col = self.apply_error_operator(level, &unit, &mut replay)?;
            out.column_mut(j).copy_from_slice(&col);
        }
        Ok(out)
    }

    /// Cycles on the finest level from `x = 0` until
    /// `‖b − A x‖ ≤ tol_rel ‖b‖`, `max_iter` cycles, or divergence.
    pub fn solve(
        &self,
        b: &[f64],
        tol_rel: f64,
        max_iter: usize,
        faults: &mut dyn FaultSource,
    ) -> Result<(Vec<f64>, IterationTrace)> {
        if !(tol_rel > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance {tol_rel} must be > 0")));
        }
        let top = self.hierarchy.finest();
        self.check_len(top, b, "solve rhs")?;
        let a = &self.hierarchy.level(top).a;
        let mut x = vec![0.0; b.len()];
        let bnorm = norm2(b);
        let mut trace = IterationTrace {
            residual_norms: vec![bnorm],
            ..Default::default()
        };
        if bnorm == 0.0 {
            trace.converged = true;
            return Ok((x, trace));
        }
        let mut r = vec![0.0; b.len()];
        for _ in 0..max_iter {
            self.cycle(top, b, &mut x, faults);
            a.spmv_into(&x, &mut r);
            let res = r.iter().zip(b).map(|(ax, bi)| (bi - ax).powi(2)).sum::<f64>().sqrt();
            trace.residual_norms.push(res);
            trace.iterations += 1;
            if res <= tol_rel * bnorm {
                trace.converged = true;
                break;
            }
            if !res.is_finite() || res > DIVERGENCE_FACTOR * bnorm {
                trace.diverged = true;
                break;
            }
        }
        Ok((x, trace))
    }
}
