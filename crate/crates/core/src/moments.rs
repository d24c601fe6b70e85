//! Posterior mean (exact) and variance (second-order expansion in `1/n`) of
//! mutual information under a Dirichlet posterior with parameters `n_ij`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::info::{i_max, psi};
use crate::tables::PosteriorCounts;

/// Mean, variance and the double-sum intermediates the variance is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiMoments {
    pub mean: f64,
    pub variance: f64,
    /// `K = sum (n_ij/n) log^2(n_ij n / (n_i+ n_+j))`
    pub k_term: f64,
    /// `J`, the empirical mutual information of the posterior counts.
    pub j_term: f64,
    /// `M = sum (1/n_ij - 1/n_i+ - 1/n_+j + 1/n) n_ij log(n_ij n / (n_i+ n_+j))`
    pub m_term: f64,
    /// `Q = 1 - sum n_ij^2 / (n_i+ n_+j)`
    pub q_term: f64,
    /// Set when the raw expansion came out negative and was clamped to 0.
    pub variance_clamped: bool,
}

/// Exact posterior mean `E[I]`. Every cell must be positive.
pub fn mi_mean_exact(pc: &PosteriorCounts) -> Result<f64> {
    pc.require_positive()?;
    let (rows, cols, n) = pc.marginals();
    let s = cols.len();
    let psi_rows: Vec<f64> = rows.iter().map(|&x| psi(x + 1.0)).collect();
    let psi_cols: Vec<f64> = cols.iter().map(|&x| psi(x + 1.0)).collect();
    let psi_n = psi(n + 1.0);
    let mut acc = 0.0;
    for (k, &nij) in pc.cells().iter().enumerate() {
        let (i, j) = (k / s, k % s);
        acc += nij * (psi(nij + 1.0) - psi_rows[i] - psi_cols[j] + psi_n);
    }
    Ok((acc / n).clamp(0.0, i_max(pc.rows(), pc.cols())))
}

/// Approximate posterior variance together with the exact mean.
///
/// Keeps terms through `O(n^-2)`; a negative result (possible only for tiny,
/// nearly independent tables) is clamped to zero and flagged.
pub fn mi_variance_approx(pc: &PosteriorCounts) -> Result<MiMoments> {
    let mean = mi_mean_exact(pc)?;
    let (rows, cols, n) = pc.marginals();
    let s = cols.len();
    let (mut k_term, mut j_term, mut m_term, mut sq) = (0.0, 0.0, 0.0, 0.0);
    for (k, &nij) in pc.cells().iter().enumerate() {
        let (ri, cj) = (rows[k / s], cols[k % s]);
        let log = (nij * n / (ri * cj)).ln();
        let w = nij / n;
        j_term += w * log;
        k_term += w * log * log;
        m_term += (1.0 / nij - 1.0 / ri - 1.0 / cj + 1.0 / n) * nij * log;
        sq += nij * nij / (ri * cj);
    }
    let q_term = 1.0 - sq;
    let dof = ((pc.rows() - 1) * (pc.cols() - 1)) as f64;
    let raw = (k_term - j_term * j_term) / (n + 1.0)
        + (m_term + dof * (0.5 - j_term) - q_term) / ((n + 1.0) * (n + 2.0));
    let variance_clamped = raw < 0.0;
    Ok(MiMoments {
        mean,
        variance: raw.max(0.0),
        k_term,
        j_term,
        m_term,
        q_term,
        variance_clamped,
    })
}

impl MiMoments {
    /// The `O(1/n)` part of the variance, `(K - J^2)/(n + 1)`.
    pub fn leading_variance(&self, total: f64) -> f64 {
        (self.k_term - self.j_term * self.j_term) / (total + 1.0)
    }
}
