//! Contingency tables between one categorical feature (rows) and the class
//! (columns), Dirichlet prior specifications, and prior-augmented counts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed joint tallies of a feature (rows, `r` values) and the class
/// (columns, `s` values).
///
/// Besides the complete pairs, a table can carry partially observed
/// instances: `missing_class[i]` counts instances with feature value `i`
/// whose class is unknown, `missing_feature[j]` counts instances of class
/// `j` whose feature value is unknown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TableLiteral", into = "TableLiteral")]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    missing_class: Vec<u64>,
    missing_feature: Vec<u64>,
}

/// JSON form: `{"r":2,"s":2,"counts":[[..],[..]],"missing_class":[..],"missing_feature":[..]}`.
#[derive(Serialize, Deserialize)]
struct TableLiteral {
    r: usize,
    s: usize,
    counts: Vec<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    missing_class: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    missing_feature: Option<Vec<u64>>,
}

impl TryFrom<TableLiteral> for ContingencyTable {
    type Error = Error;

    fn try_from(lit: TableLiteral) -> Result<Self> {
        if lit.counts.len() != lit.r {
            return Err(Error::Input(format!(
                "counts has {} rows, expected r = {}",
                lit.counts.len(),
                lit.r
            )));
        }
        if let Some(i) = lit.counts.iter().position(|row| row.len() != lit.s) {
            return Err(Error::Input(format!(
                "counts row {i} has {} entries, expected s = {}",
                lit.counts[i].len(),
                lit.s
            )));
        }
        let counts = lit.counts.into_iter().flatten().collect();
        ContingencyTable::from_parts(
            lit.r,
            lit.s,
            counts,
            lit.missing_class.unwrap_or_else(|| vec![0; lit.r]),
            lit.missing_feature.unwrap_or_else(|| vec![0; lit.s]),
        )
    }
}

impl From<ContingencyTable> for TableLiteral {
    fn from(t: ContingencyTable) -> Self {
        let counts = t.counts.chunks(t.cols).map(<[u64]>::to_vec).collect();
        let any = |v: &[u64]| v.iter().any(|&c| c > 0);
        TableLiteral {
            r: t.rows,
            s: t.cols,
            counts,
            missing_class: any(&t.missing_class).then_some(t.missing_class),
            missing_feature: any(&t.missing_feature).then_some(t.missing_feature),
        }
    }
}

fn check_dims(r: usize, s: usize) -> Result<()> {
    if r == 0 || s == 0 {
        return Err(Error::Input(format!(
            "table dimensions must be at least 1x1, got {r}x{s}"
        )));
    }
    Ok(())
}

impl ContingencyTable {
    pub fn zeros(r: usize, s: usize) -> Result<Self> {
        check_dims(r, s)?;
        Ok(Self {
            rows: r,
            cols: s,
            counts: vec![0; r * s],
            missing_class: vec![0; r],
            missing_feature: vec![0; s],
        })
    }

    /// Builds a complete table from a row-major grid.
    pub fn from_grid(grid: &[Vec<u64>]) -> Result<Self> {
        let r = grid.len();
        let s = grid.first().map_or(0, Vec::len);
        check_dims(r, s)?;
        if grid.iter().any(|row| row.len() != s) {
            return Err(Error::Input("ragged count grid".into()));
        }
        Self::from_parts(r, s, grid.concat(), vec![0; r], vec![0; s])
    }

    /// Builds a table from flat row-major counts plus both missing vectors.
    pub fn from_parts(
        r: usize,
        s: usize,
        counts: Vec<u64>,
        missing_class: Vec<u64>,
        missing_feature: Vec<u64>,
    ) -> Result<Self> {
        check_dims(r, s)?;
        if counts.len() != r * s {
            return Err(Error::Input(format!(
                "expected {} counts for a {r}x{s} table, got {}",
                r * s,
                counts.len()
            )));
        }
        if missing_class.len() != r {
            return Err(Error::Input(format!(
                "missing_class must have length r = {r}, got {}",
                missing_class.len()
            )));
        }
        if missing_feature.len() != s {
            return Err(Error::Input(format!(
                "missing_feature must have length s = {s}, got {}",
                missing_feature.len()
            )));
        }
        Ok(Self {
            rows: r,
            cols: s,
            counts,
            missing_class,
            missing_feature,
        })
    }

    /// Tallies `(feature value, class)` index pairs into an `r x s` table.
    pub fn from_pairs(pairs: &[(usize, usize)], r: usize, s: usize) -> Result<Self> {
        let mut table = Self::zeros(r, s)?;
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if i >= r || j >= s {
                return Err(Error::Input(format!(
                    "pair #{k} ({i}, {j}) lies outside the {r}x{s} table"
                )));
            }
            table.counts[i * s + j] += 1;
        }
        Ok(table)
    }

    pub fn with_missing(self, missing_class: Vec<u64>, missing_feature: Vec<u64>) -> Result<Self> {
        Self::from_parts(self.rows, self.cols, self.counts, missing_class, missing_feature)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.cols + j]
    }

    /// Row-major complete-pair counts.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn missing_class(&self) -> &[u64] {
        &self.missing_class
    }

    pub fn missing_feature(&self) -> &[u64] {
        &self.missing_feature
    }

    pub fn has_missing(&self) -> bool {
        self.missing_class.iter().chain(&self.missing_feature).any(|&c| c > 0)
    }

    /// Number of complete pairs.
    pub fn complete_total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Number of contributing instances, complete or partial.
    pub fn total(&self) -> u64 {
        self.complete_total()
            + self.missing_class.iter().sum::<u64>()
            + self.missing_feature.iter().sum::<u64>()
    }

    /// Swaps the roles of the two variables; the missing vectors swap too.
    pub fn transpose(&self) -> Self {
        let (r, s) = (self.rows, self.cols);
        let mut counts = vec![0; r * s];
        for i in 0..r {
            for j in 0..s {
                counts[j * r + i] = self.counts[i * s + j];
            }
        }
        Self {
            rows: s,
            cols: r,
            counts,
            missing_class: self.missing_feature.clone(),
            missing_feature: self.missing_class.clone(),
        }
    }

    /// The same table with both missing vectors cleared.
    pub fn complete_part(&self) -> Self {
        Self {
            missing_class: vec![0; self.rows],
            missing_feature: vec![0; self.cols],
            ..self.clone()
        }
    }
}

/// Dirichlet prior, expressed as a pseudo-count added to every cell.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Prior {
    /// One pseudo-count per cell.
    #[default]
    Uniform,
    /// One half per cell.
    Jeffreys,
    /// No pseudo-counts.
    Haldane,
    /// `1/(r*s)` per cell.
    Perks,
    Custom(f64),
}

impl Prior {
    pub fn custom(weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::Config(format!(
                "prior weight must be a finite non-negative number, got {weight}"
            )));
        }
        Ok(Prior::Custom(weight))
    }

    /// Per-cell pseudo-count for an `r x s` table.
    pub fn weight(&self, r: usize, s: usize) -> f64 {
        match *self {
            Prior::Uniform => 1.0,
            Prior::Jeffreys => 0.5,
            Prior::Haldane => 0.0,
            Prior::Perks => 1.0 / (r * s) as f64,
            Prior::Custom(w) => w,
        }
    }

    pub fn is_uniform(&self) -> bool {
        match *self {
            Prior::Uniform => true,
            Prior::Custom(w) => w == 1.0,
            _ => false,
        }
    }
}

impl fmt::Display for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prior::Uniform => f.write_str("uniform"),
            Prior::Jeffreys => f.write_str("jeffreys"),
            Prior::Haldane => f.write_str("haldane"),
            Prior::Perks => f.write_str("perks"),
            Prior::Custom(w) => write!(f, "custom:{w}"),
        }
    }
}

impl FromStr for Prior {
    type Err = Error;

    /// Accepts `uniform`, `jeffreys`, `haldane`, `perks`, `custom:<w>` or a bare number.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "uniform" => Ok(Prior::Uniform),
            "jeffreys" => Ok(Prior::Jeffreys),
            "haldane" => Ok(Prior::Haldane),
            "perks" => Ok(Prior::Perks),
            other => {
                let num = other.strip_prefix("custom:").unwrap_or(other);
                let w: f64 = num
                    .parse()
                    .map_err(|_| Error::Config(format!("unknown prior '{s}'")))?;
                Prior::custom(w)
            }
        }
    }
}

impl TryFrom<String> for Prior {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Prior> for String {
    fn from(p: Prior) -> Self {
        p.to_string()
    }
}

/// Dirichlet posterior parameters `n_ij = n'_ij + n''_ij` with cached marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorCounts {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
    total: f64,
}

impl PosteriorCounts {
    /// Wraps a row-major grid of non-negative reals. Zero cells are allowed
    /// here; operations that cannot handle them reject them.
    pub fn from_cells(r: usize, s: usize, cells: Vec<f64>) -> Result<Self> {
        check_dims(r, s)?;
        if cells.len() != r * s {
            return Err(Error::Input(format!(
                "expected {} cells for a {r}x{s} grid, got {}",
                r * s,
                cells.len()
            )));
        }
        if let Some(k) = cells.iter().position(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Input(format!(
                "cell ({}, {}) = {} is not a finite non-negative count",
                k / s,
                k % s,
                cells[k]
            )));
        }
        let mut row_sums = vec![0.0; r];
        let mut col_sums = vec![0.0; s];
        for (k, &c) in cells.iter().enumerate() {
            row_sums[k / s] += c;
            col_sums[k % s] += c;
        }
        let total = row_sums.iter().sum();
        Ok(Self {
            rows: r,
            cols: s,
            cells,
            row_sums,
            col_sums,
            total,
        })
    }

    pub fn from_grid(grid: &[Vec<f64>]) -> Result<Self> {
        let r = grid.len();
        let s = grid.first().map_or(0, Vec::len);
        if grid.iter().any(|row| row.len() != s) {
            return Err(Error::Input("ragged count grid".into()));
        }
        Self::from_cells(r, s, grid.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.cols + j]
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn row_marginals(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn col_marginals(&self) -> &[f64] {
        &self.col_sums
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// `(n_i+, n_+j, n)`.
    pub fn marginals(&self) -> (&[f64], &[f64], f64) {
        (&self.row_sums, &self.col_sums, self.total)
    }

    pub fn transpose(&self) -> Self {
        let (r, s) = (self.rows, self.cols);
        let mut cells = vec![0.0; r * s];
        for i in 0..r {
            for j in 0..s {
                cells[j * r + i] = self.cells[i * s + j];
            }
        }
        Self {
            rows: s,
            cols: r,
            cells,
            row_sums: self.col_sums.clone(),
            col_sums: self.row_sums.clone(),
            total: self.total,
        }
    }

    /// First cell (row-major order) whose count is zero.
    pub fn first_zero_cell(&self) -> Option<(usize, usize)> {
        self.cells
            .iter()
            .position(|&c| c == 0.0)
            .map(|k| (k / self.cols, k % self.cols))
    }

    pub(crate) fn require_positive(&self) -> Result<()> {
        match self.first_zero_cell() {
            Some((row, col)) => Err(Error::ZeroCell { row, col }),
            None => Ok(()),
        }
    }
}

/// Adds the prior pseudo-count to every complete-pair cell.
///
/// A zero pseudo-count on a table with an empty cell is rejected, because
/// the moment formulas divide by `n_ij`. Missing-value vectors are ignored
/// here; see [`crate::missing`].
pub fn apply_prior(table: &ContingencyTable, prior: Prior) -> Result<PosteriorCounts> {
    let w = prior.weight(table.rows(), table.cols());
    if !(w.is_finite() && w >= 0.0) {
        return Err(Error::Config(format!("prior weight {w} is invalid")));
    }
    let cells = table.counts().iter().map(|&c| c as f64 + w).collect();
    let pc = PosteriorCounts::from_cells(table.rows(), table.cols(), cells)?;
    pc.require_positive()?;
    Ok(pc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(pc: &PosteriorCounts) -> Vec<f64> {
        pc.cells().to_vec()
    }

    #[test]
    fn empty_sample_builds_zero_table() {
        let t = ContingencyTable::from_pairs(&[], 2, 2).unwrap();
        assert_eq!(t.counts(), &[0, 0, 0, 0]);
        assert_eq!(t.total(), 0);
    }

    #[test]
    fn pairs_are_tallied() {
        let t = ContingencyTable::from_pairs(&[(0, 0), (0, 0), (1, 1)], 2, 2).unwrap();
        assert_eq!(t.counts(), &[2, 0, 0, 1]);
        assert!(!t.has_missing());
    }

    #[test]
    fn figure_one_upper_vector_from_pairs() {
        let mut pairs = Vec::new();
        for (cell, n) in [((0, 0), 40), ((0, 1), 10), ((1, 0), 20), ((1, 1), 80)] {
            pairs.extend(std::iter::repeat(cell).take(n));
        }
        assert_eq!(pairs.len(), 150);
        let t = ContingencyTable::from_pairs(&pairs, 2, 2).unwrap();
        assert_eq!(t, ContingencyTable::from_grid(&[vec![40, 10], vec![20, 80]]).unwrap());
    }

    #[test]
    fn out_of_range_pair_is_named() {
        let err = ContingencyTable::from_pairs(&[(0, 0), (2, 1)], 2, 2).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(2, 1)") && msg.contains("#1"), "{msg}");
    }

    #[test]
    fn uniform_prior_adds_one() {
        let t = ContingencyTable::from_grid(&[vec![1, 0], vec![0, 1]]).unwrap();
        let pc = apply_prior(&t, Prior::Uniform).unwrap();
        assert_eq!(grid(&pc), vec![2.0, 1.0, 1.0, 2.0]);
        assert_eq!(pc.total(), 6.0);
    }

    #[test]
    fn perks_prior_on_two_by_two() {
        let t = ContingencyTable::from_grid(&[vec![40, 10], vec![20, 80]]).unwrap();
        let pc = apply_prior(&t, Prior::Perks).unwrap();
        assert_eq!(grid(&pc), vec![40.25, 10.25, 20.25, 80.25]);
        assert_eq!(pc.total(), 151.0);
    }

    #[test]
    fn haldane_with_zero_cell_is_rejected() {
        let t = ContingencyTable::from_grid(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert!(matches!(
            apply_prior(&t, Prior::Haldane),
            Err(Error::ZeroCell { row: 0, col: 1 })
        ));
        assert!(matches!(
            apply_prior(&t, Prior::custom(0.0).unwrap()),
            Err(Error::ZeroCell { .. })
        ));
    }

    #[test]
    fn zero_weight_is_identity_on_positive_tables() {
        let t = ContingencyTable::from_grid(&[vec![3, 1, 4], vec![1, 5, 9]]).unwrap();
        let pc = apply_prior(&t, Prior::Haldane).unwrap();
        let expected: Vec<f64> = t.counts().iter().map(|&c| c as f64).collect();
        assert_eq!(grid(&pc), expected);
    }

    #[test]
    fn marginal_examples() {
        let pc = PosteriorCounts::from_grid(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(pc.marginals(), (&[3.0, 3.0][..], &[3.0, 3.0][..], 6.0));

        let pc = PosteriorCounts::from_grid(&[vec![41.0, 11.0], vec![21.0, 81.0]]).unwrap();
        assert_eq!(pc.row_marginals(), &[52.0, 102.0]);
        assert_eq!(pc.col_marginals(), &[62.0, 92.0]);
        assert_eq!(pc.total(), 154.0);

        let pc = PosteriorCounts::from_grid(&[vec![7.5]]).unwrap();
        assert_eq!(pc.marginals(), (&[7.5][..], &[7.5][..], 7.5));
    }

    #[test]
    fn transposition_swaps_marginals() {
        let pc = PosteriorCounts::from_grid(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.5]]).unwrap();
        let t = pc.transpose();
        assert_eq!(t.rows(), 3);
        assert_eq!(t.row_marginals(), pc.col_marginals());
        assert_eq!(t.col_marginals(), pc.row_marginals());
        assert_eq!(t.total(), pc.total());
        assert_eq!(t.transpose(), pc);
    }

    #[test]
    fn table_transpose_swaps_missing_vectors() {
        let t = ContingencyTable::from_grid(&[vec![1, 2, 3], vec![4, 5, 6]])
            .unwrap()
            .with_missing(vec![7, 8], vec![1, 0, 2])
            .unwrap();
        let tt = t.transpose();
        assert_eq!(tt.rows(), 3);
        assert_eq!(tt.count(2, 1), 6);
        assert_eq!(tt.missing_class(), &[1, 0, 2]);
        assert_eq!(tt.missing_feature(), &[7, 8]);
        assert_eq!(tt.total(), t.total());
    }

    #[test]
    fn json_literal_with_defaults() {
        let t: ContingencyTable =
            serde_json::from_str(r#"{"r":2,"s":2,"counts":[[1,2],[3,4]]}"#).unwrap();
        assert_eq!(t.missing_class(), &[0, 0]);
        assert_eq!(t.missing_feature(), &[0, 0]);

        let t: ContingencyTable = serde_json::from_str(
            r#"{"r":2,"s":2,"counts":[[1,2],[3,4]],"missing_class":[2,0]}"#,
        )
        .unwrap();
        assert_eq!(t.missing_class(), &[2, 0]);
        let back: ContingencyTable = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);

        assert!(serde_json::from_str::<ContingencyTable>(r#"{"r":2,"s":2,"counts":[[1,2]]}"#).is_err());
        assert!(serde_json::from_str::<ContingencyTable>(r#"{"r":2,"s":2,"counts":[[1,2],[3]]}"#).is_err());
    }

    #[test]
    fn prior_parsing() {
        assert_eq!("Uniform".parse::<Prior>().unwrap(), Prior::Uniform);
        assert_eq!("perks".parse::<Prior>().unwrap().weight(2, 2), 0.25);
        assert_eq!("custom:0.3".parse::<Prior>().unwrap(), Prior::Custom(0.3));
        assert_eq!("2".parse::<Prior>().unwrap(), Prior::Custom(2.0));
        assert!("-1".parse::<Prior>().is_err());
        assert!("bogus".parse::<Prior>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn grids() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
            (1usize..5, 1usize..5).prop_flat_map(|(r, s)| {
                (Just(r), Just(s), prop::collection::vec(0.0f64..50.0, r * s))
            })
        }

        proptest! {
            #[test]
            fn marginals_sum_to_total((r, s, cells) in grids()) {
                let pc = PosteriorCounts::from_cells(r, s, cells).unwrap();
                let rs: f64 = pc.row_marginals().iter().sum();
                let cs: f64 = pc.col_marginals().iter().sum();
                let tol = 1e-12 * pc.total().max(1.0);
                prop_assert!((rs - pc.total()).abs() <= tol);
                prop_assert!((cs - pc.total()).abs() <= tol);
            }

            #[test]
            fn row_permutation_permutes_marginals((r, s, cells) in grids(), shift in 0usize..5) {
                let pc = PosteriorCounts::from_cells(r, s, cells.clone()).unwrap();
                let k = shift % r;
                let mut rotated = Vec::with_capacity(r * s);
                for i in 0..r {
                    let src = (i + k) % r;
                    rotated.extend_from_slice(&cells[src * s..(src + 1) * s]);
                }
                let rp = PosteriorCounts::from_cells(r, s, rotated).unwrap();
                for i in 0..r {
                    prop_assert_eq!(rp.row_marginals()[i], pc.row_marginals()[(i + k) % r]);
                }
                prop_assert!((rp.total() - pc.total()).abs() <= 1e-12 * pc.total().max(1.0));
            }
        }
    }
}
