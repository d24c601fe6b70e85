//! The classify-then-update experiment: at every step the filters look at
//! the instances seen so far, naive Bayes predicts the next instance with
//! the selected attributes, then learns it.

use serde::{Deserialize, Serialize};

use crate::dist::Family;
use crate::error::{Error, Result};
use crate::filters::{decide_all, Filter, FilterConfig};
use crate::naive_bayes::NbModel;
use crate::tables::{ContingencyTable, Prior};

use super::dataset::{order_hash, Dataset, MissingMode};
use super::ttest::{critical_value, differences, from_sums};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub filters: Vec<Filter>,
    pub epsilon: f64,
    pub p_level: f64,
    pub prior: Prior,
    pub family: Family,
    pub seed: Option<u64>,
    pub missing: Option<MissingMode>,
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRun {
    pub filter: Filter,
    pub order_hash: String,
    pub predictions: Vec<usize>,
    pub correct: Vec<bool>,
    /// Correct predictions over instances so far, after each step.
    pub running_accuracy: Vec<f64>,
    pub selected_count: Vec<usize>,
    /// Ids of the attributes used at each step.
    pub selected: Vec<Vec<usize>>,
    pub final_accuracy: f64,
    pub average_selected: f64,
}

/// Paired t-test of `a` against `b` on the first `k` instances, for every `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub a: Filter,
    pub b: Filter,
    /// `None` for `k = 1` and where the statistic is infinite.
    pub t: Vec<Option<f64>>,
    pub significant: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub instance_count: usize,
    pub attribute_count: usize,
    pub order_hash: String,
    pub runs: Vec<FilterRun>,
    pub pairs: Vec<PairComparison>,
}

impl RunReport {
    pub fn run(&self, filter: Filter) -> Option<&FilterRun> {
        self.runs.iter().find(|r| r.filter == filter)
    }

    pub fn pair(&self, a: Filter, b: Filter) -> Option<&PairComparison> {
        self.pairs.iter().find(|p| p.a == a && p.b == b)
    }
}

/// Attribute-by-class tallies of the instances absorbed so far.
struct Tallies {
    classes: usize,
    counts: Vec<Vec<u64>>,
    /// Per attribute, instances of each class with the attribute missing.
    missing: Vec<Vec<u64>>,
}

impl Tallies {
    fn new(vocab: &[usize], classes: usize) -> Self {
        Self {
            classes,
            counts: vocab.iter().map(|&v| vec![0; v * classes]).collect(),
            missing: vocab.iter().map(|_| vec![0; classes]).collect(),
        }
    }

    fn add(&mut self, values: &[Option<usize>], class: usize) {
        for (a, v) in values.iter().enumerate() {
            match v {
                Some(v) => self.counts[a][v * self.classes + class] += 1,
                None => self.missing[a][class] += 1,
            }
        }
    }

    fn tables(&self) -> Result<Vec<ContingencyTable>> {
        self.counts
            .iter()
            .zip(&self.missing)
            .map(|(c, m)| {
                let r = c.len() / self.classes;
                ContingencyTable::from_parts(r, self.classes, c.clone(), vec![0; r], m.clone())
            })
            .collect()
    }
}

/// Attribute-by-class tables over every instance with a known class.
pub fn attribute_tables(ds: &Dataset) -> Result<Vec<ContingencyTable>> {
    ds.validate()?;
    let mut tallies = Tallies::new(&ds.vocab_sizes(), ds.class_count());
    for inst in &ds.instances {
        if let Some(c) = inst.class {
            tallies.add(&inst.values, c);
        }
    }
    tallies.tables()
}

/// Runs every filter in `filters` over the dataset's instance order.
///
/// All filters share one pass: the tallies and the naive Bayes model do not
/// depend on which attributes were selected, so only the prediction differs.
pub fn run_incremental(ds: &Dataset, cfg: &FilterConfig, filters: &[Filter]) -> Result<RunReport> {
    if filters.is_empty() {
        return Err(Error::Config("no filters requested".into()));
    }
    cfg.validate(filters)?;
    ds.validate()?;
    if ds.is_empty() {
        return Err(Error::Input("dataset has no instances".into()));
    }
    let vocab = ds.vocab_sizes();
    let classes = ds.class_count();
    let mut model = NbModel::new(vocab.clone(), classes)?;
    let mut tallies = Tallies::new(&vocab, classes);
    let n = ds.len();
    let mut runs: Vec<FilterRun> = filters
        .iter()
        .map(|&filter| FilterRun {
            filter,
            order_hash: String::new(),
            predictions: Vec::with_capacity(n),
            correct: Vec::with_capacity(n),
            running_accuracy: Vec::with_capacity(n),
            selected_count: Vec::with_capacity(n),
            selected: Vec::with_capacity(n),
            final_accuracy: 0.0,
            average_selected: 0.0,
        })
        .collect();
    let mut hits = vec![0usize; filters.len()];

    for (t, inst) in ds.instances.iter().enumerate() {
        let class = inst.class.ok_or_else(|| {
            Error::Input(format!("row {} has no class; prepare the dataset first", inst.row))
        })?;
        let decisions = decide_all(&tallies.tables()?, cfg)?;
        for (k, run) in runs.iter_mut().enumerate() {
            let selected: Vec<usize> = decisions
                .iter()
                .filter(|d| d.keeps(run.filter))
                .map(|d| d.attribute)
                .collect();
            let predicted = model.predict(&inst.values, &selected)?.class;
            hits[k] += (predicted == class) as usize;
            run.predictions.push(predicted);
            run.correct.push(predicted == class);
            run.running_accuracy.push(hits[k] as f64 / (t + 1) as f64);
            run.selected_count.push(selected.len());
            run.selected.push(selected);
        }
        model.update(&inst.values, class)?;
        tallies.add(&inst.values, class);
    }

    let hash = order_hash(&ds.instances);
    for run in &mut runs {
        run.order_hash = hash.clone();
        run.final_accuracy = *run.running_accuracy.last().unwrap();
        run.average_selected = run.selected_count.iter().sum::<usize>() as f64 / n as f64;
    }
    let critical: Vec<f64> = (0..n).map(|k| if k >= 1 { critical_value(k) } else { f64::NAN }).collect();
    let mut pairs = Vec::new();
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            pairs.push(compare(&runs[i], &runs[j], &critical));
        }
    }
    Ok(RunReport {
        config: ConfigEcho {
            filters: filters.to_vec(),
            epsilon: cfg.epsilon,
            p_level: cfg.p_level,
            prior: cfg.prior,
            family: cfg.family,
            seed: ds.provenance.seed,
            missing: ds.provenance.missing,
            source: ds.provenance.source.clone(),
        },
        instance_count: n,
        attribute_count: ds.attribute_count(),
        order_hash: hash,
        runs,
        pairs,
    })
}

/// `critical[k - 1]` holds the critical value for `k - 1` degrees of freedom.
fn compare(a: &FilterRun, b: &FilterRun, critical: &[f64]) -> PairComparison {
    let n = a.correct.len();
    let mut t = Vec::with_capacity(n);
    let mut significant = Vec::with_capacity(n);
    t.push(None);
    significant.push(false);
    let (mut sum, mut sum_sq) = differences(&a.correct, &b.correct, 1);
    for k in 2..=n {
        let d = a.correct[k - 1] as i64 - b.correct[k - 1] as i64;
        sum += d;
        sum_sq += d * d;
        let res = from_sums(sum, sum_sq, k, critical[k - 1]);
        t.push(res.t.is_finite().then_some(res.t));
        significant.push(res.significant);
    }
    PairComparison { a: a.filter, b: b.filter, t, significant }
}

/// The per-`k` test for any two filters of a finished report, in either order.
pub fn compare_runs(report: &RunReport, a: Filter, b: Filter) -> Result<PairComparison> {
    let find = |f: Filter| {
        report
            .run(f)
            .ok_or_else(|| Error::Input(format!("report has no run for filter {f}")))
    };
    let (ra, rb) = (find(a)?, find(b)?);
    let critical: Vec<f64> = (0..ra.correct.len())
        .map(|k| if k >= 1 { critical_value(k) } else { f64::NAN })
        .collect();
    Ok(compare(ra, rb, &critical))
}
