//! Feature-relevance filters: empirical (F), forward (FF) and backward (BF).
//!
//! Tables are oriented attribute (rows) by class (columns). F keeps an
//! attribute when its empirical mutual information exceeds `epsilon`; FF
//! keeps it only when `P(I > epsilon) > p`; BF discards it only when
//! `P(I <= epsilon) >= p`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{fit_or_fallback, Family};
use crate::error::{Error, Result};
use crate::info::{i_max, mutual_information};
use crate::missing::mi_variance_missing;
use crate::moments::mi_variance_approx;
use crate::tables::{apply_prior, ContingencyTable, Prior};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Filter {
    F,
    FF,
    BF,
}

impl Filter {
    pub const ALL: [Filter; 3] = [Filter::F, Filter::FF, Filter::BF];
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Filter::F => "f",
            Filter::FF => "ff",
            Filter::BF => "bf",
        })
    }
}

impl FromStr for Filter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f" => Ok(Filter::F),
            "ff" => Ok(Filter::FF),
            "bf" => Ok(Filter::BF),
            other => Err(Error::Config(format!("unknown filter {other:?} (expected f, ff or bf)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Relevance threshold in nats.
    pub epsilon: f64,
    /// Credible level for FF and BF.
    pub p_level: f64,
    pub family: Family,
    pub prior: Prior,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.003,
            p_level: 0.95,
            family: Family::Beta,
            prior: Prior::Uniform,
        }
    }
}

impl FilterConfig {
    /// Checks ranges, and that FF/BF are not asked to test against `epsilon = 0`.
    pub fn validate(&self, filters: &[Filter]) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.p_level > 0.0 && self.p_level < 1.0) {
            return Err(Error::Config(format!("p must lie in (0, 1), got {}", self.p_level)));
        }
        if self.epsilon == 0.0 {
            if let Some(f) = filters.iter().find(|f| **f != Filter::F) {
                return Err(Error::Config(format!(
                    "filter {f} needs epsilon > 0: two variables are independent (I = 0) \
                     with posterior probability zero, so P(I > 0) = 1 for every attribute"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub attribute: usize,
    /// Empirical mutual information of the observed (complete) counts.
    pub j: f64,
    pub mean: f64,
    pub variance: f64,
    pub prob_exceeds_eps: f64,
    pub keep_f: bool,
    pub keep_ff: bool,
    pub keep_bf: bool,
    /// Single-valued attribute or class (`I_max = 0`).
    pub degenerate: bool,
    /// Moments came from the incomplete-data formulas.
    pub used_missing: bool,
    pub fit_family: String,
    pub fallback: Option<String>,
}

impl FilterDecision {
    pub fn keeps(&self, filter: Filter) -> bool {
        match filter {
            Filter::F => self.keep_f,
            Filter::FF => self.keep_ff,
            Filter::BF => self.keep_bf,
        }
    }
}

/// `(keep_f, keep_ff, keep_bf)` from the decision statistics.
pub fn keep_flags(j: f64, prob_exceeds_eps: f64, epsilon: f64, p_level: f64) -> (bool, bool, bool) {
    (
        j > epsilon,
        prob_exceeds_eps > p_level,
        1.0 - prob_exceeds_eps < p_level,
    )
}

/// Evaluates all three filters on one attribute-by-class table.
pub fn decide(attribute: usize, table: &ContingencyTable, cfg: &FilterConfig) -> Result<FilterDecision> {
    cfg.validate(&[Filter::F])?;
    let (r, s) = (table.rows(), table.cols());
    let observed: Vec<f64> = table.counts().iter().map(|&c| c as f64).collect();
    let upper = i_max(r, s);
    if upper == 0.0 {
        return Ok(FilterDecision {
            attribute,
            j: 0.0,
            mean: 0.0,
            variance: 0.0,
            prob_exceeds_eps: 0.0,
            keep_f: false,
            keep_ff: false,
            keep_bf: false,
            degenerate: true,
            used_missing: false,
            fit_family: "point_mass".into(),
            fallback: None,
        });
    }
    let j = mutual_information(r, s, &observed);
    let used_missing = table.has_missing();
    let (mean, variance) = if used_missing {
        let m = mi_variance_missing(table, cfg.prior)?;
        (m.mean, m.variance)
    } else {
        let m = mi_variance_approx(&apply_prior(table, cfg.prior)?)?;
        (m.mean, m.variance)
    };
    let fit = fit_or_fallback(cfg.family, mean, variance, upper)?;
    let prob_exceeds_eps = fit.dist.prob_exceeds(cfg.epsilon);
    let (keep_f, keep_ff, keep_bf) = keep_flags(j, prob_exceeds_eps, cfg.epsilon, cfg.p_level);
    Ok(FilterDecision {
        attribute,
        j,
        mean,
        variance,
        prob_exceeds_eps,
        keep_f,
        keep_ff,
        keep_bf,
        degenerate: false,
        used_missing,
        fit_family: fit.dist.family_name().into(),
        fallback: fit.fallback,
    })
}

/// Decisions for every attribute, in attribute order.
pub fn decide_all(tables: &[ContingencyTable], cfg: &FilterConfig) -> Result<Vec<FilterDecision>> {
    if let Some(first) = tables.first() {
        if let Some((a, t)) = tables.iter().enumerate().find(|(_, t)| t.cols() != first.cols()) {
            return Err(Error::Input(format!(
                "attribute {a} has {} classes, attribute 0 has {}",
                t.cols(),
                first.cols()
            )));
        }
    }
    tables
        .par_iter()
        .enumerate()
        .map(|(a, t)| decide(a, t, cfg))
        .collect()
}

/// Ids of the attributes `filter` keeps.
pub fn select_features(tables: &[ContingencyTable], cfg: &FilterConfig, filter: Filter) -> Result<Vec<usize>> {
    cfg.validate(&[filter])?;
    Ok(decide_all(tables, cfg)?
        .iter()
        .filter(|d| d.keeps(filter))
        .map(|d| d.attribute)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::sample_mi;

    fn table(grid: &[Vec<u64>]) -> ContingencyTable {
        ContingencyTable::from_grid(grid).unwrap()
    }

    #[test]
    fn empirical_value_for_small_table() {
        let d = decide(0, &table(&[vec![8, 2], vec![4, 16]]), &FilterConfig::default()).unwrap();
        // (8 ln 2 + 2 ln(1/3) + 4 ln(1/2) + 16 ln(4/3)) / 30
        let oracle = (8.0 * 2f64.ln() - 2.0 * 3f64.ln() - 4.0 * 2f64.ln() + 16.0 * (4f64 / 3.0).ln()) / 30.0;
        assert!((d.j - oracle).abs() < 1e-14);
        assert!((d.j - 0.172609).abs() < 1e-6);
        assert!(d.keep_f);
    }

    #[test]
    fn constant_attribute_is_discarded() {
        let d = decide(3, &table(&[vec![7, 12]]), &FilterConfig::default()).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.attribute, 3);
        assert!(!d.keep_f && !d.keep_ff && !d.keep_bf);
        assert_eq!(d.prob_exceeds_eps, 0.0);
    }

    #[test]
    fn strong_dependence_is_kept_by_all() {
        let grid: Vec<Vec<u64>> = [[40u64, 10], [20, 80]]
            .iter()
            .map(|r| r.iter().map(|x| x * 64).collect())
            .collect();
        let t = table(&grid);
        let d = decide(0, &t, &FilterConfig::default()).unwrap();
        assert!(d.keep_f && d.keep_ff && d.keep_bf);
        let mc = sample_mi(&apply_prior(&t, Prior::Uniform).unwrap(), 20_000, 8).unwrap();
        assert_eq!(mc.exceedance(0.003), 1.0);
        assert!(d.prob_exceeds_eps > 0.999_999);
    }

    #[test]
    fn empty_table_is_prior_only() {
        let t = ContingencyTable::zeros(3, 2).unwrap();
        let d = decide(0, &t, &FilterConfig::default()).unwrap();
        assert_eq!(d.j, 0.0);
        assert!(!d.keep_f && !d.keep_ff);
        let haldane = FilterConfig { prior: Prior::Haldane, ..Default::default() };
        assert!(matches!(decide(0, &t, &haldane), Err(Error::ZeroCell { .. })));
    }

    #[test]
    fn missing_counts_use_incomplete_formulas() {
        let t = table(&[vec![10, 2], vec![3, 12]]).with_missing(vec![0, 0], vec![4, 5]).unwrap();
        let d = decide(0, &t, &FilterConfig::default()).unwrap();
        assert!(d.used_missing);
        let m = mi_variance_missing(&t, Prior::Uniform).unwrap();
        assert_eq!((d.mean, d.variance), (m.mean, m.variance));
    }

    #[test]
    fn config_validation() {
        let zero = FilterConfig { epsilon: 0.0, ..Default::default() };
        assert!(zero.validate(&[Filter::F]).is_ok());
        assert!(matches!(zero.validate(&[Filter::F, Filter::BF]), Err(Error::Config(_))));
        let tables = [table(&[vec![1, 2], vec![3, 4]])];
        assert!(matches!(select_features(&tables, &zero, Filter::FF), Err(Error::Config(_))));
        assert!(select_features(&tables, &zero, Filter::F).is_ok());
        for p in [0.0, 1.0, f64::NAN] {
            let c = FilterConfig { p_level: p, ..Default::default() };
            assert!(c.validate(&[Filter::F]).is_err());
        }
        let neg = FilterConfig { epsilon: -0.1, ..Default::default() };
        assert!(neg.validate(&[Filter::F]).is_err());
    }

    #[test]
    fn selection_basics() {
        let cfg = FilterConfig::default();
        assert!(select_features(&[], &cfg, Filter::FF).unwrap().is_empty());
        let mixed = [table(&[vec![1, 2], vec![3, 4]]), table(&[vec![1, 2, 3]])];
        assert!(matches!(select_features(&mixed, &cfg, Filter::F), Err(Error::Input(_))));
        let tables = [
            table(&[vec![30, 2], vec![3, 40]]),
            table(&[vec![5, 5], vec![5, 5]]),
            table(&[vec![9, 9]]),
        ];
        assert_eq!(select_features(&tables, &cfg, Filter::F).unwrap(), vec![0]);
        assert_eq!(select_features(&tables, &cfg, Filter::FF).unwrap(), vec![0]);
        assert_eq!(select_features(&tables, &cfg, Filter::BF).unwrap(), vec![0, 1]);
    }

    #[test]
    fn filter_names_round_trip() {
        for f in Filter::ALL {
            assert_eq!(f.to_string().parse::<Filter>().unwrap(), f);
        }
        assert!("x".parse::<Filter>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn tables() -> impl Strategy<Value = ContingencyTable> {
            (1usize..4, 2usize..4).prop_flat_map(|(r, s)| {
                prop::collection::vec(0u64..40, r * s).prop_map(move |cells| {
                    ContingencyTable::from_parts(r, s, cells, vec![0; r], vec![0; s]).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn flags_follow_stored_fields(t in tables(), eps in 0.0005f64..0.1, p in 0.05f64..0.99) {
                let cfg = FilterConfig { epsilon: eps, p_level: p, ..Default::default() };
                let d = decide(0, &t, &cfg).unwrap();
                let flags = keep_flags(d.j, d.prob_exceeds_eps, eps, p);
                prop_assert_eq!(flags, (d.keep_f, d.keep_ff, d.keep_bf));
                prop_assert_eq!(d.keep_f, d.j > eps);
                prop_assert_eq!(d.keep_ff, d.prob_exceeds_eps > p);
                prop_assert_eq!(d.keep_bf, 1.0 - d.prob_exceeds_eps < p);
                if p >= 0.5 {
                    prop_assert!(!d.keep_ff || d.keep_bf);
                }
            }

            #[test]
            fn raising_epsilon_never_adds(t in tables(), e1 in 0.0005f64..0.1, de in 0.0f64..0.1, p in 0.5f64..0.99) {
                let lo = decide(0, &t, &FilterConfig { epsilon: e1, p_level: p, ..Default::default() }).unwrap();
                let hi = decide(0, &t, &FilterConfig { epsilon: e1 + de, p_level: p, ..Default::default() }).unwrap();
                prop_assert!(!hi.keep_f || lo.keep_f);
                prop_assert!(!hi.keep_ff || lo.keep_ff);
                prop_assert!(!hi.keep_bf || lo.keep_bf);
            }

            #[test]
            fn raising_p(t in tables(), p1 in 0.05f64..0.9, dp in 0.0f64..0.09) {
                let lo = decide(0, &t, &FilterConfig { p_level: p1, ..Default::default() }).unwrap();
                let hi = decide(0, &t, &FilterConfig { p_level: p1 + dp, ..Default::default() }).unwrap();
                prop_assert!(!hi.keep_ff || lo.keep_ff);
                prop_assert!(!lo.keep_bf || hi.keep_bf);
            }
        }
    }
}
