//! Closed-form convergence bounds and the fit of the degradation law.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Upper bound on the Lyapunov spectral radius of a faulty smoother whose
/// fault-free error operator has norm `e_norm`, with `na_norm = ‖N A‖`.
pub fn smoother_bound(e_norm: f64, na_norm: f64, q: f64) -> f64 {
    ((1.0 - q) * e_norm * e_norm + q * (e_norm + na_norm).powi(2)).sqrt()
}

/// [`smoother_bound`] with `‖N A‖ ≤ 1 + γ`, where `γ = ‖E^S‖`.
pub fn smoother_corollary_bound(gamma: f64, q: f64) -> f64 {
    (gamma * gamma + q * (1.0 + 4.0 * gamma + 3.0 * gamma * gamma)).sqrt()
}

/// Largest fault rate for which [`smoother_corollary_bound`] stays below 1.
pub fn smoother_threshold(gamma: f64) -> f64 {
    (1.0 - gamma) / (1.0 + 3.0 * gamma)
}

/// Predicted growth of the degradation `ϱ − ‖E^TG‖` with problem size,
/// without its unknown constant.
pub fn theory_scaling(d: usize, n: f64, q: f64) -> Result<f64> {
    if !(1..=5).contains(&d) {
        return Err(Error::InvalidParameter(format!("dimension {d} outside 1..=5")));
    }
    if n < 2.0 {
        return Err(Error::InvalidParameter(format!("n = {n} must be ≥ 2")));
    }
    Ok(match d {
        4 => q * n.ln().sqrt(),
        5 => q,
        _ => q * n.powf(scaling_exponent(d)),
    })
}

/// Exponent of `n` in [`theory_scaling`] for `d < 4`.
pub fn scaling_exponent(d: usize) -> f64 {
    if d < 4 {
        (4.0 - d as f64) / (2.0 * d as f64)
    } else {
        0.0
    }
}

/// One cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub n: usize,
    pub q: f64,
    pub rho: f64,
}

/// Fault rate at which one size reaches one level of `ϱ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPoint {
    pub level: f64,
    pub n: usize,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    /// `α` in the law `ϱ = f(q n^α)`.
    pub exponent: f64,
    /// Root-mean-square residual of `log q` on the contours.
    pub residual: f64,
    pub contours: Vec<ContourPoint>,
    pub levels_used: usize,
}

/// Fits `α` in `ϱ(n, q) = f(q n^α)` from level sets.
///
/// For every level and size the rate `q*` with `ϱ(n, q*) = level` is found
/// by interpolation on the `q` grid; on the contours `log q* = c − α log n`,
/// so `α` is the pooled within-level regression slope. When a size has a
/// `q = 0` cell, `log(ϱ − ϱ₀)` is interpolated linearly in `log q` (exact for
/// power laws); otherwise `ϱ` itself is.
pub fn fit_degradation_exponent(points: &[SweepPoint], levels: &[f64]) -> Result<ScalingFit> {
    let mut by_size: BTreeMap<usize, Vec<SweepPoint>> = BTreeMap::new();
    for p in points {
        by_size.entry(p.n).or_default().push(*p);
    }
    let mut contours = Vec::new();
    for (&n, cells) in &by_size {
        let baseline = cells.iter().find(|c| c.q == 0.0).map(|c| c.rho);
        let mut curve: Vec<_> = cells.iter().filter(|c| c.q > 0.0).copied().collect();
        curve.sort_by(|a, b| a.q.total_cmp(&b.q));
        for &level in levels {
            if let Some(q) = crossing(&curve, baseline, level) {
                contours.push(ContourPoint { level, n, q });
            }
        }
    }
    let (mut sxy, mut sxx, mut used) = (0.0, 0.0, 0);
    let mut groups: Vec<(f64, f64, f64)> = Vec::new();
    for &level in levels {
        let pts: Vec<(f64, f64)> = contours
            .iter()
            .filter(|c| c.level == level)
            .map(|c| ((c.n as f64).ln(), c.q.ln()))
            .collect();
        if pts.len() < 2 {
            continue;
        }
        used += 1;
        let k = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
        for (x, y) in &pts {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
        }
        groups.push((level, mx, my));
    }
    if used == 0 || sxx == 0.0 {
        return Err(Error::Inconclusive(
            "no level is crossed at two or more sizes".into(),
        ));
    }
    let slope = sxy / sxx;
    let mut ss = 0.0;
    let mut count = 0usize;
    for &(level, mx, my) in &groups {
        for c in contours.iter().filter(|c| c.level == level) {
            let pred = my + slope * ((c.n as f64).ln() - mx);
            ss += (c.q.ln() - pred).powi(2);
            count += 1;
        }
    }
    Ok(ScalingFit {
        exponent: -slope,
        residual: (ss / count as f64).sqrt(),
        contours,
        levels_used: used,
    })
}

fn crossing(curve: &[SweepPoint], baseline: Option<f64>, level: f64) -> Option<f64> {
    let transform = |rho: f64| match baseline {
        Some(b) => (rho - b).ln(),
        None => rho,
    };
    if baseline.is_some_and(|b| level <= b) {
        return None;
    }
    let target = transform(level);
    curve.windows(2).find_map(|w| {
        let (lo, hi) = (w[0], w[1]);
        if !(lo.rho < level && hi.rho >= level) {
            return None;
        }
        let (ylo, yhi) = (transform(lo.rho), transform(hi.rho));
        if !ylo.is_finite() || !yhi.is_finite() || yhi == ylo {
            return None;
        }
        let t = (target - ylo) / (yhi - ylo);
        Some((lo.q.ln() + t * (hi.q.ln() - lo.q.ln())).exp())
    })
}
