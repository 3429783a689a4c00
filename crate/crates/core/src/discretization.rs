//! Nested piecewise-linear finite element hierarchies for `−Δu = f` with
//! homogeneous Dirichlet data on the unit interval or unit square.
//!
//! Level `ℓ` has `coarse_cells · 2^ℓ` cells per direction. Boundary nodes are
//! eliminated, so unknowns are the interior nodes numbered row-major
//! (`x` fastest). In 2D every square cell is split along the diagonal from
//! its lower-left to its upper-right corner; red refinement preserves that
//! orientation, which makes the spaces nested.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{write_matrix_market, BandCholesky, SparseMatrix, DENSE_CAP};

/// Default cap on the number of fine-level unknowns.
pub const MAX_UNKNOWNS: usize = 1_100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Dimension {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Dimension {
    pub fn from_usize(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            _ => Err(Error::InvalidParameter(format!(
                "spatial dimension must be 1 or 2, got {d}"
            ))),
        }
    }

    pub fn as_usize(self) -> usize {
        match self {
            Self::One => 1,
            Self::Two => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Level {
    /// Number of unknowns.
    pub n: usize,
    /// Mesh size.
    pub h: f64,
    /// Cells per direction.
    pub cells: usize,
    /// Stiffness matrix.
    pub a: SparseMatrix,
    /// Mass matrix.
    pub m: SparseMatrix,
    /// Prolongation to level `ℓ+1`; `None` on the finest level.
    pub p_to_finer: Option<SparseMatrix>,
    /// Restriction from level `ℓ+1`, always the exact transpose of `p_to_finer`.
    pub r_from_finer: Option<SparseMatrix>,
}

#[derive(Debug, Clone)]
pub struct GridHierarchy {
    pub dim: Dimension,
    /// Levels `0..=L`, coarsest first.
    pub levels: Vec<Level>,
}

/// Right-hand sides supported by [`GridHierarchy::assemble_load`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Load {
    /// `f ≡ 1`, integrated exactly against the hat functions.
    ConstantOne,
    /// Point evaluation at interior node `i`: the canonical unit vector.
    PointMass(usize),
}

/// Interior-node numbering on a structured grid with `cells` cells per direction.
fn interior_index(dim: Dimension, cells: usize, i: usize, j: usize) -> Option<usize> {
    let m = cells - 1;
    match dim {
        Dimension::One => (i >= 1 && i <= m).then(|| i - 1),
        Dimension::Two => (i >= 1 && i <= m && j >= 1 && j <= m).then(|| (j - 1) * m + (i - 1)),
    }
}

fn unknowns(dim: Dimension, cells: usize) -> usize {
    let m = cells - 1;
    match dim {
        Dimension::One => m,
        Dimension::Two => m * m,
    }
}

/// Elements as lists of grid-node coordinates `(i, j)`.
fn elements(dim: Dimension, cells: usize) -> Vec<Vec<(usize, usize)>> {
    match dim {
        Dimension::One => (0..cells).map(|k| vec![(k, 0), (k + 1, 0)]).collect(),
        Dimension::Two => {
            let mut out = Vec::with_capacity(2 * cells * cells);
            for j in 0..cells {
                for i in 0..cells {
                    out.push(vec![(i, j), (i + 1, j), (i + 1, j + 1)]);
                    out.push(vec![(i, j), (i + 1, j + 1), (i, j + 1)]);
                }
            }
            out
        }
    }
}

/// Local P1 stiffness and mass matrices plus the element measure.
fn local_matrices(dim: Dimension, h: f64, nodes: &[(usize, usize)]) -> (Vec<f64>, Vec<f64>, f64) {
    match dim {
        Dimension::One => {
            let k = vec![1.0 / h, -1.0 / h, -1.0 / h, 1.0 / h];
            let m = vec![h / 3.0, h / 6.0, h / 6.0, h / 3.0];
            (k, m, h)
        }
        Dimension::Two => {
            let p: Vec<(f64, f64)> = nodes
                .iter()
                .map(|&(i, j)| (i as f64 * h, j as f64 * h))
                .collect();
            let det = (p[1].0 - p[0].0) * (p[2].1 - p[0].1) - (p[2].0 - p[0].0) * (p[1].1 - p[0].1);
            let area = 0.5 * det.abs();
            // Gradient of the barycentric coordinate of vertex a: rotate the opposite edge.
            let grads: Vec<(f64, f64)> = (0..3)
                .map(|a| {
                    let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                    ((p[b].1 - p[c].1) / det, (p[c].0 - p[b].0) / det)
                })
                .collect();
            let mut k = vec![0.0; 9];
            let mut m = vec![0.0; 9];
            for a in 0..3 {
                for b in 0..3 {
                    k[a * 3 + b] = area * (grads[a].0 * grads[b].0 + grads[a].1 * grads[b].1);
                    m[a * 3 + b] = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                }
            }
            (k, m, area)
        }
    }
}

fn assemble(dim: Dimension, cells: usize) -> (SparseMatrix, SparseMatrix, Vec<f64>) {
    let h = 1.0 / cells as f64;
    let n = unknowns(dim, cells);
    let mut kt = Vec::new();
    let mut mt = Vec::new();
    let mut load = vec![0.0; n];
    for el in elements(dim, cells) {
        let (k, m, measure) = local_matrices(dim, h, &el);
        let ids: Vec<Option<usize>> = el
            .iter()
            .map(|&(i, j)| interior_index(dim, cells, i, j))
            .collect();
        let nv = el.len();
        for a in 0..nv {
            let Some(ia) = ids[a] else { continue };
            load[ia] += measure / nv as f64;
            for b in 0..nv {
                let Some(ib) = ids[b] else { continue };
                kt.push((ia, ib, k[a * nv + b]));
                mt.push((ia, ib, m[a * nv + b]));
            }
        }
    }
    let a = SparseMatrix::from_triplets(n, n, &kt).expect("assembly indices are in range");
    let m = SparseMatrix::from_triplets(n, n, &mt).expect("assembly indices are in range");
    (drop_roundoff(&a), drop_roundoff(&m), load)
}

/// Removes entries that cancel to round-off (the diagonal edge couplings in 2D).
fn drop_roundoff(a: &SparseMatrix) -> SparseMatrix {
    let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let kept: Vec<_> = a
        .triplets()
        .filter(|&(_, _, v)| v.abs() > 1e-13 * scale)
        .collect();
    SparseMatrix::from_triplets(a.nrows(), a.ncols(), &kept).expect("same shape")
}

/// Linear interpolation from `coarse_cells` to `2·coarse_cells` cells.
fn prolongation(dim: Dimension, coarse_cells: usize) -> SparseMatrix {
    let fine_cells = 2 * coarse_cells;
    let nf = unknowns(dim, fine_cells);
    let nc = unknowns(dim, coarse_cells);
    let parents_1d = |a: usize| -> Vec<usize> {
        if a % 2 == 0 {
            vec![a / 2]
        } else {
            vec![(a - 1) / 2, (a + 1) / 2]
        }
    };
    let mut t = Vec::new();
    match dim {
        Dimension::One => {
            for a in 1..fine_cells {
                let row = interior_index(dim, fine_cells, a, 0).unwrap();
                let parents = parents_1d(a);
                let w = 1.0 / parents.len() as f64;
                for pa in parents {
                    if let Some(col) = interior_index(dim, coarse_cells, pa, 0) {
                        t.push((row, col, w));
                    }
                }
            }
        }
        Dimension::Two => {
            for b in 1..fine_cells {
                for a in 1..fine_cells {
                    let row = interior_index(dim, fine_cells, a, b).unwrap();
                    let parents: Vec<(usize, usize)> = match (a % 2, b % 2) {
                        (0, 0) => vec![(a / 2, b / 2)],
                        (1, 0) => vec![((a - 1) / 2, b / 2), ((a + 1) / 2, b / 2)],
                        (0, 1) => vec![(a / 2, (b - 1) / 2), (a / 2, (b + 1) / 2)],
                        // Midpoint of the coarse diagonal edge.
                        _ => vec![((a - 1) / 2, (b - 1) / 2), ((a + 1) / 2, (b + 1) / 2)],
                    };
                    let w = 1.0 / parents.len() as f64;
                    for (pa, pb) in parents {
                        if let Some(col) = interior_index(dim, coarse_cells, pa, pb) {
                            t.push((row, col, w));
                        }
                    }
                }
            }
        }
    }
    SparseMatrix::from_triplets(nf, nc, &t).expect("prolongation indices are in range")
}

impl GridHierarchy {
    /// Builds levels `0..=L` with `coarse_cells · 2^ℓ` cells per direction.
    pub fn build(dim: Dimension, levels: usize, coarse_cells: usize) -> Result<Self> {
        Self::build_with_cap(dim, levels, coarse_cells, MAX_UNKNOWNS)
    }

    pub fn build_with_cap(
        dim: Dimension,
        levels: usize,
        coarse_cells: usize,
        max_unknowns: usize,
    ) -> Result<Self> {
        if levels < 1 {
            return Err(Error::InvalidParameter("need at least one refinement (L ≥ 1)".into()));
        }
        if coarse_cells < 2 {
            return Err(Error::InvalidParameter(
                "coarse mesh needs at least 2 cells per direction for an interior node".into(),
            ));
        }
        let fine_cells = coarse_cells
            .checked_shl(levels as u32)
            .filter(|c| c >> levels == coarse_cells)
            .ok_or_else(|| Error::InvalidParameter("level count overflows".into()))?;
        let n_fine = match dim {
            Dimension::One => fine_cells - 1,
            Dimension::Two => (fine_cells - 1).saturating_mul(fine_cells - 1),
        };
        if n_fine > max_unknowns {
            return Err(Error::TooLarge {
                what: "finest level",
                size: n_fine,
                cap: max_unknowns,
            });
        }
        let mut out = Vec::with_capacity(levels + 1);
        for l in 0..=levels {
            let cells = coarse_cells << l;
            let (a, m, _) = assemble(dim, cells);
            let p = (l < levels).then(|| prolongation(dim, cells));
            let r = p.as_ref().map(SparseMatrix::transpose);
            out.push(Level {
                n: a.nrows(),
                h: 1.0 / cells as f64,
                cells,
                a,
                m,
                p_to_finer: p,
                r_from_finer: r,
            });
        }
        Ok(Self { dim, levels: out })
    }

    /// Two-level hierarchy whose fine level has `fine_cells` cells per direction.
    pub fn two_grid(dim: Dimension, fine_cells: usize) -> Result<Self> {
        if fine_cells % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "fine cell count {fine_cells} must be even"
            )));
        }
        Self::build(dim, 1, fine_cells / 2)
    }

    /// Index of the finest level, `L`.
    pub fn finest(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, l: usize) -> &Level {
        &self.levels[l]
    }

    /// Prolongation from level `l-1` to level `l`.
    pub fn prolongation_into(&self, l: usize) -> &SparseMatrix {
        self.levels[l - 1].p_to_finer.as_ref().expect("level below finest has P")
    }

    /// Restriction from level `l` to level `l-1`.
    pub fn restriction_from(&self, l: usize) -> &SparseMatrix {
        self.levels[l - 1].r_from_finer.as_ref().expect("level below finest has R")
    }

    pub fn assemble_load(&self, level: usize, f: Load) -> Result<Vec<f64>> {
        let lv = self
            .levels
            .get(level)
            .ok_or(Error::IndexOutOfRange { index: level, dim: self.levels.len() })?;
        match f {
            Load::ConstantOne => Ok(assemble(self.dim, lv.cells).2),
            Load::PointMass(i) => {
                if i >= lv.n {
                    return Err(Error::IndexOutOfRange { index: i, dim: lv.n });
                }
                let mut e = vec![0.0; lv.n];
                e[i] = 1.0;
                Ok(e)
            }
        }
    }

    /// `max_i ‖A_ℓ⁻¹ e_i‖₂`, computed exactly.
    pub fn green_norm_diagnostic(&self, level: usize) -> Result<f64> {
        let lv = self
            .levels
            .get(level)
            .ok_or(Error::IndexOutOfRange { index: level, dim: self.levels.len() })?;
        if lv.n > DENSE_CAP {
            return Err(Error::TooLarge {
                what: "green norm diagnostic level (subsample node indices instead)",
                size: lv.n,
                cap: DENSE_CAP,
            });
        }
        let chol = BandCholesky::factor(&lv.a)?;
        let mut best = 0.0f64;
        let mut col = vec![0.0; lv.n];
        for i in 0..lv.n {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[i] = 1.0;
            chol.solve_in_place(&mut col);
            best = best.max(crate::linalg::norm2(&col));
        }
        Ok(best)
    }

    /// Writes `A_ℓ` for every level and `P` between consecutive levels.
    pub fn export_matrix_market(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (l, lv) in self.levels.iter().enumerate() {
            let path = dir.join(format!("A_{l}.mtx"));
            write_matrix_market(&lv.a, BufWriter::new(File::create(&path)?))?;
            written.push(path);
            if let Some(p) = &lv.p_to_finer {
                let path = dir.join(format!("P_{l}_{}.mtx", l + 1));
                write_matrix_market(p, BufWriter::new(File::create(&path)?))?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

impl Level {
    pub fn a_dense(&self) -> DMatrix<f64> {
        self.a.to_dense()
    }
}
