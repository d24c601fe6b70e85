//! Point quantities: empirical mutual information, its sharp upper bound,
//! and the digamma function used by the posterior moment formulas.

use crate::error::{Error, Result};
use crate::tables::PosteriorCounts;

/// Mutual information of the frequencies in `pc`, in nats.
///
/// Empty cells contribute nothing (`0 log 0 = 0`).
pub fn empirical_mi(pc: &PosteriorCounts) -> Result<f64> {
    let (rows, cols, total) = pc.marginals();
    if !(total > 0.0) {
        return Err(Error::Input("mutual information of an empty table".into()));
    }
    Ok(mi_from_parts(pc.cells(), rows, cols, total))
}

/// Mutual information of a non-negative `r x s` grid (counts or chances),
/// normalised by its own total. Returns 0 for an all-zero grid.
pub fn mutual_information(r: usize, s: usize, grid: &[f64]) -> f64 {
    assert_eq!(grid.len(), r * s, "grid does not match {r}x{s}");
    let mut rows = vec![0.0; r];
    let mut cols = vec![0.0; s];
    for (k, &c) in grid.iter().enumerate() {
        rows[k / s] += c;
        cols[k % s] += c;
    }
    let total: f64 = rows.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    mi_from_parts(grid, &rows, &cols, total)
}

/// `sum_ij (n_ij/n) log(n_ij n / (n_i+ n_+j))` with precomputed marginals.
pub(crate) fn mi_from_parts(cells: &[f64], rows: &[f64], cols: &[f64], total: f64) -> f64 {
    let s = cols.len();
    let mut acc = 0.0;
    for (i, &ri) in rows.iter().enumerate() {
        if ri <= 0.0 {
            continue;
        }
        for (j, &cj) in cols.iter().enumerate() {
            let c = cells[i * s + j];
            if c > 0.0 {
                acc += c * (c * total / (ri * cj)).ln();
            }
        }
    }
    (acc / total).max(0.0)
}

/// Sharp upper bound `min(log r, log s)` of mutual information.
pub fn i_max(r: usize, s: usize) -> f64 {
    (r.min(s).max(1) as f64).ln()
}

/// The digamma function psi(x) = d/dx log Gamma(x), for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    Ok(psi(x))
}

/// Digamma without the domain check; callers guarantee `x > 0`.
pub(crate) fn psi(mut x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut shift = 0.0;
    while x < 8.0 {
        shift += 1.0 / x;
        x += 1.0;
    }
    // Asymptotic series with Bernoulli terms B_2k/(2k) through x^-14.
    let inv2 = 1.0 / (x * x);
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    x.ln() - 0.5 / x - tail - shift
}
