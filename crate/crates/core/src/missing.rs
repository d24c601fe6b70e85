//! Leading-order posterior mean and variance of mutual information when one
//! variable of the pair is sometimes unobserved.
//!
//! With `n_i?` instances whose row variable was observed but whose column
//! variable is missing, the chances are filled in as
//!
//! ```text
//! pi_ij = (n_i+ + n_i?)/N * n_ij/n_i+          N = n + sum_i n_i?
//! rho_ij = N pi_ij^2 / n_ij                    rho_i? = N pi_i+^2 / n_i?
//! Q_i? = rho_i? / (rho_i? + rho_i+)            Q = sum_i rho_i+ Q_i?
//! K = sum_ij rho_ij L_ij^2                     L_ij = log(pi_ij / (pi_i+ pi_+j))
//! J_i+ = sum_j rho_ij L_ij    J = sum_i J_i+ Q_i?    P = sum_i J_i+^2 Q_i? / rho_i?
//! E[I] ~ I(pi)      Var[I] ~ (K - J^2/Q - P) / N
//! ```
//!
//! A row with `n_i? = 0` has `rho_i? = inf`, handled as `Q_i? = 1` and no
//! contribution to `P`. With no missing values at all everything reduces to
//! the complete-data leading term `(K - J^2)/n`.
//!
//! Tables whose *row* variable is missing (`n_?j`) are handled by
//! transposing, computing, and transposing the cell grids back.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::mutual_information;
use crate::tables::{ContingencyTable, Prior};

/// Which variable of the table is partially missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingAxis {
    /// Nothing is missing.
    None,
    /// Column (class) missing, counted by `missing_class` (`n_i?`).
    Column,
    /// Row (feature) missing, counted by `missing_feature` (`n_?j`).
    Row,
}

/// Barred quantities and the resulting leading-order moments.
///
/// Grids (`pi_hat`, `rho`) are row-major in the table's own orientation.
/// Vectors are indexed by the values of the variable that stays observed:
/// rows for [`MissingAxis::Column`] and [`MissingAxis::None`], columns for
/// [`MissingAxis::Row`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingMoments {
    pub axis: MissingAxis,
    pub pi_hat: Vec<f64>,
    pub rho: Vec<f64>,
    /// `rho_i?`; `None` stands for infinity (no partial observations).
    pub rho_missing: Vec<Option<f64>>,
    pub q_bar_i: Vec<f64>,
    pub q_bar: f64,
    pub k_bar: f64,
    pub j_bar: f64,
    pub p_bar: f64,
    pub j_bar_rows: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    /// `N`: prior-augmented complete total plus partially observed instances.
    pub total: f64,
    pub variance_clamped: bool,
    /// The expansion assumes a uniform prior; other priors are extrapolation.
    pub prior_extrapolated: bool,
}

/// Oriented view: counts and the matching missing vector for the row variable.
struct Oriented {
    axis: MissingAxis,
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
    missing: Vec<f64>,
}

fn orient(table: &ContingencyTable, prior: Prior) -> Result<Oriented> {
    let by_class = table.missing_class().iter().any(|&c| c > 0);
    let by_feature = table.missing_feature().iter().any(|&c| c > 0);
    let (axis, t) = match (by_class, by_feature) {
        (true, true) => {
            return Err(Error::Input(
                "both variables have partially observed instances; only one may be missing".into(),
            ))
        }
        (false, true) => (MissingAxis::Row, table.transpose()),
        (true, false) => (MissingAxis::Column, table.clone()),
        (false, false) => (MissingAxis::None, table.clone()),
    };
    let w = prior.weight(table.rows(), table.cols());
    Ok(Oriented {
        axis,
        rows: t.rows(),
        cols: t.cols(),
        cells: t.counts().iter().map(|&c| c as f64 + w).collect(),
        missing: t.missing_class().iter().map(|&c| c as f64).collect(),
    })
}

fn transpose_grid(grid: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = grid[i * cols + j];
        }
    }
    out
}

/// Filled-in chances for the oriented table.
fn fill(rows: usize, cols: usize, cells: &[f64], missing: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n: f64 = cells.iter().sum();
    let total = n + missing.iter().sum::<f64>();
    if !(total > 0.0) {
        return Err(Error::Input("no observations and no prior mass".into()));
    }
    let mut pi = vec![0.0; rows * cols];
    for i in 0..rows {
        let row = &cells[i * cols..(i + 1) * cols];
        let ni: f64 = row.iter().sum();
        if ni > 0.0 {
            let scale = (ni + missing[i]) / total / ni;
            for (p, &c) in pi[i * cols..(i + 1) * cols].iter_mut().zip(row) {
                *p = scale * c;
            }
        } else if missing[i] > 0.0 {
            return Err(Error::UndefinedFill {
                row: i,
                missing: missing[i],
            });
        }
    }
    Ok((pi, total))
}

/// Core computation on an oriented table with real-valued counts.
fn compute(
    axis: MissingAxis,
    rows: usize,
    cols: usize,
    cells: &[f64],
    missing: &[f64],
) -> Result<MissingMoments> {
    let (pi, total) = fill(rows, cols, cells, missing)?;
    let mut pi_rows = vec![0.0; rows];
    let mut pi_cols = vec![0.0; cols];
    for (k, &p) in pi.iter().enumerate() {
        pi_rows[k / cols] += p;
        pi_cols[k % cols] += p;
    }

    let mut rho = vec![0.0; rows * cols];
    let mut k_bar = 0.0;
    let mut j_bar_rows = vec![0.0; rows];
    let mut rho_rows = vec![0.0; rows];
    for k in 0..rows * cols {
        let (i, j) = (k / cols, k % cols);
        if cells[k] > 0.0 && pi[k] > 0.0 {
            rho[k] = total * pi[k] * pi[k] / cells[k];
            let log = (pi[k] / (pi_rows[i] * pi_cols[j])).ln();
            k_bar += rho[k] * log * log;
            j_bar_rows[i] += rho[k] * log;
            rho_rows[i] += rho[k];
        }
    }

    let mut rho_missing = Vec::with_capacity(rows);
    let mut q_bar_i = Vec::with_capacity(rows);
    let (mut q_bar, mut j_bar, mut p_bar) = (0.0, 0.0, 0.0);
    for i in 0..rows {
        // 1/rho_i? is finite (zero) even where rho_i? itself is infinite.
        let inv_rho = if missing[i] > 0.0 {
            missing[i] / (total * pi_rows[i] * pi_rows[i])
        } else {
            0.0
        };
        rho_missing.push((missing[i] > 0.0).then(|| 1.0 / inv_rho));
        let q = 1.0 / (1.0 + rho_rows[i] * inv_rho);
        q_bar_i.push(q);
        q_bar += rho_rows[i] * q;
        j_bar += j_bar_rows[i] * q;
        p_bar += j_bar_rows[i] * j_bar_rows[i] * q * inv_rho;
    }

    let raw = (k_bar - j_bar * j_bar / q_bar - p_bar) / total;
    Ok(MissingMoments {
        axis,
        mean: mutual_information(rows, cols, &pi),
        pi_hat: pi,
        rho,
        rho_missing,
        q_bar_i,
        q_bar,
        k_bar,
        j_bar,
        p_bar,
        j_bar_rows,
        variance: raw.max(0.0),
        total,
        variance_clamped: raw < 0.0,
        prior_extrapolated: false,
    })
}

/// Filled-in chance grid `pi_hat`, row-major in the table's orientation.
pub fn fill_estimate(table: &ContingencyTable, prior: Prior) -> Result<Vec<f64>> {
    let o = orient(table, prior)?;
    let (pi, _) = fill(o.rows, o.cols, &o.cells, &o.missing)?;
    Ok(match o.axis {
        MissingAxis::Row => transpose_grid(&pi, o.rows, o.cols),
        _ => pi,
    })
}

/// Leading-order posterior mean, `I(pi_hat)`.
pub fn mi_mean_missing(table: &ContingencyTable, prior: Prior) -> Result<f64> {
    let pi = fill_estimate(table, prior)?;
    Ok(mutual_information(table.rows(), table.cols(), &pi))
}

/// All barred quantities plus the leading-order mean and variance.
pub fn mi_variance_missing(table: &ContingencyTable, prior: Prior) -> Result<MissingMoments> {
    let o = orient(table, prior)?;
    let mut m = compute(o.axis, o.rows, o.cols, &o.cells, &o.missing)?;
    if o.axis == MissingAxis::Row {
        m.pi_hat = transpose_grid(&m.pi_hat, o.rows, o.cols);
        m.rho = transpose_grid(&m.rho, o.rows, o.cols);
    }
    m.prior_extrapolated = !prior.is_uniform();
    Ok(m)
}
