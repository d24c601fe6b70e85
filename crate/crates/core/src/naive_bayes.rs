//! Incremental naive Bayes over categorical attributes with add-one
//! smoothing on both the class prior and the class conditionals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative gap below which two log scores are treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NbModel {
    vocab: Vec<usize>,
    class_counts: Vec<u64>,
    /// Per attribute, `value x class` tallies in row-major order.
    cond_counts: Vec<Vec<u64>>,
    seen: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: usize,
    pub posterior: Vec<f64>,
}

impl NbModel {
    /// An empty model for attributes with the given value counts.
    pub fn new(vocab: Vec<usize>, classes: usize) -> Result<Self> {
        if classes == 0 {
            return Err(Error::Input("naive Bayes needs at least one class".into()));
        }
        if let Some(a) = vocab.iter().position(|&v| v == 0) {
            return Err(Error::Input(format!("attribute {a} has an empty vocabulary")));
        }
        let cond_counts = vocab.iter().map(|&v| vec![0; v * classes]).collect();
        Ok(Self {
            vocab,
            class_counts: vec![0; classes],
            cond_counts,
            seen: 0,
        })
    }

    pub fn classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn vocab(&self) -> &[usize] {
        &self.vocab
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn class_counts(&self) -> &[u64] {
        &self.class_counts
    }

    pub fn cond_count(&self, attribute: usize, value: usize, class: usize) -> u64 {
        self.cond_counts[attribute][value * self.classes() + class]
    }

    fn check_instance(&self, instance: &[Option<usize>]) -> Result<()> {
        if instance.len() != self.vocab.len() {
            return Err(Error::Input(format!(
                "instance has {} values, model has {} attributes",
                instance.len(),
                self.vocab.len()
            )));
        }
        for (a, v) in instance.iter().enumerate() {
            if let Some(v) = *v {
                if v >= self.vocab[a] {
                    return Err(Error::Input(format!(
                        "attribute {a} value {v} outside vocabulary of size {}",
                        self.vocab[a]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Class scores in log space; missing values in `selected` attributes
    /// contribute nothing.
    pub fn log_scores(&self, instance: &[Option<usize>], selected: &[usize]) -> Result<Vec<f64>> {
        self.check_instance(instance)?;
        let s = self.classes();
        let norm = ((self.seen + s as u64) as f64).ln();
        let mut scores: Vec<f64> = self
            .class_counts
            .iter()
            .map(|&c| ((c + 1) as f64).ln() - norm)
            .collect();
        for &a in selected {
            if a >= self.vocab.len() {
                return Err(Error::Input(format!("selected attribute {a} does not exist")));
            }
            let Some(v) = instance[a] else { continue };
            let row = &self.cond_counts[a][v * s..(v + 1) * s];
            for (j, score) in scores.iter_mut().enumerate() {
                *score += ((row[j] + 1) as f64).ln()
                    - ((self.class_counts[j] + self.vocab[a] as u64) as f64).ln();
            }
        }
        Ok(scores)
    }

    /// Most probable class (lowest index on ties) and the normalised posterior.
    ///
    /// Scores that are equal as exact fractions can differ by rounding once
    /// summed as logarithms, so log scores closer than `TIE_TOLERANCE` count
    /// as a tie.
    pub fn predict(&self, instance: &[Option<usize>], selected: &[usize]) -> Result<Prediction> {
        let scores = self.log_scores(instance, selected)?;
        let mut class = 0;
        for (j, &x) in scores.iter().enumerate() {
            if x > scores[class] + TIE_TOLERANCE * scores[class].abs().max(1.0) {
                class = j;
            }
        }
        let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = scores.iter().map(|&x| (x - top).exp()).collect();
        let total: f64 = weights.iter().sum();
        Ok(Prediction {
            class,
            posterior: weights.iter().map(|w| w / total).collect(),
        })
    }

    /// Absorbs one labelled instance.
    pub fn update(&mut self, instance: &[Option<usize>], class: usize) -> Result<()> {
        self.check_instance(instance)?;
        let s = self.classes();
        if class >= s {
            return Err(Error::Input(format!("class {class} outside 0..{s}")));
        }
        self.class_counts[class] += 1;
        for (a, v) in instance.iter().enumerate() {
            if let Some(v) = *v {
                self.cond_counts[a][v * s + class] += 1;
            }
        }
        self.seen += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_model_is_uniform() {
        let m = NbModel::new(vec![3, 2], 4).unwrap();
        let p = m.predict(&[Some(1), Some(0)], &[]).unwrap();
        assert_eq!(p.class, 0);
        assert!(p.posterior.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        let p = m.predict(&[Some(1), Some(0)], &[0, 1]).unwrap();
        assert!(p.posterior.iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn three_matching_instances() {
        let mut m = NbModel::new(vec![2], 2).unwrap();
        for _ in 0..3 {
            m.update(&[Some(0)], 0).unwrap();
        }
        // prior 4/5 vs 1/5, likelihood 4/5 vs 1/2
        let p = m.predict(&[Some(0)], &[0]).unwrap();
        assert_eq!(p.class, 0);
        assert!((p.posterior[0] - 0.64 / 0.74).abs() < 1e-12);
        // Without the attribute only the smoothed prior remains.
        let p = m.predict(&[Some(0)], &[]).unwrap();
        assert!((p.posterior[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn update_bookkeeping_and_errors() {
        let mut m = NbModel::new(vec![2, 3], 2).unwrap();
        m.update(&[Some(1), Some(2)], 1).unwrap();
        assert_eq!(m.seen(), 1);
        assert_eq!(m.cond_count(0, 1, 1), 1);
        assert_eq!(m.cond_count(1, 2, 1), 1);
        assert_eq!(m.cond_counts.iter().map(|g| g.iter().sum::<u64>()).sum::<u64>(), 2);
        assert!(m.update(&[Some(2), Some(0)], 0).is_err());
        assert!(m.update(&[Some(0), Some(0)], 2).is_err());
        assert!(m.update(&[Some(0)], 0).is_err());
        assert!(m.predict(&[Some(0), Some(0)], &[5]).is_err());
        assert!(NbModel::new(vec![2], 0).is_err());
        assert!(NbModel::new(vec![0], 2).is_err());
        assert_eq!(m.seen(), 1);
    }

    #[test]
    fn missing_value_is_skipped() {
        let mut m = NbModel::new(vec![2, 2], 2).unwrap();
        m.update(&[None, Some(1)], 0).unwrap();
        assert_eq!(m.cond_counts[0].iter().sum::<u64>(), 0);
        let with = m.predict(&[None, Some(1)], &[0, 1]).unwrap();
        let without = m.predict(&[None, Some(1)], &[1]).unwrap();
        assert_eq!(with, without);
    }

    fn random_instance(rng: &mut ChaCha8Rng, vocab: &[usize]) -> Vec<Option<usize>> {
        vocab.iter().map(|&v| Some(rng.random_range(0..v))).collect()
    }

    #[test]
    fn hundred_updates_conserve_counts() {
        let vocab = [3, 2, 4];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = NbModel::new(vocab.to_vec(), 3).unwrap();
        for _ in 0..100 {
            let x = random_instance(&mut rng, &vocab);
            m.update(&x, rng.random_range(0..3)).unwrap();
        }
        assert_eq!(m.class_counts().iter().sum::<u64>(), 100);
        for a in 0..vocab.len() {
            for j in 0..3 {
                let col: u64 = (0..vocab[a]).map(|v| m.cond_count(a, v, j)).sum();
                assert_eq!(col, m.class_counts()[j]);
            }
        }
    }

    #[test]
    fn update_raises_own_class_posterior() {
        let vocab = [3, 3, 2];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut m = NbModel::new(vocab.to_vec(), 3).unwrap();
        let all = [0, 1, 2];
        for _ in 0..300 {
            let x = random_instance(&mut rng, &vocab);
            let c = rng.random_range(0..3);
            let before = m.predict(&x, &all).unwrap().posterior[c];
            m.update(&x, c).unwrap();
            let after = m.predict(&x, &all).unwrap().posterior[c];
            assert!(after > before, "{before} -> {after}");
        }
    }

    #[test]
    fn order_of_updates_does_not_matter() {
        let vocab = [2, 5];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data: Vec<(Vec<Option<usize>>, usize)> = (0..60)
            .map(|_| (random_instance(&mut rng, &vocab), rng.random_range(0..2)))
            .collect();
        let mut a = NbModel::new(vocab.to_vec(), 2).unwrap();
        let mut b = a.clone();
        for (x, c) in &data {
            a.update(x, *c).unwrap();
        }
        for (x, c) in data.iter().rev() {
            b.update(x, *c).unwrap();
        }
        assert_eq!(a, b);
    }

    /// Exact score as a fraction `num / den`.
    fn rational_score(m: &NbModel, x: &[Option<usize>], selected: &[usize], j: usize) -> (u128, u128) {
        let s = m.classes() as u128;
        let mut num = (m.class_counts[j] + 1) as u128;
        let mut den = m.seen as u128 + s;
        for &a in selected {
            let v = x[a].unwrap();
            num *= (m.cond_count(a, v, j) + 1) as u128;
            den *= (m.class_counts[j] + m.vocab[a] as u64) as u128;
        }
        (num, den)
    }

    #[test]
    fn argmax_agrees_with_exact_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let vocab: Vec<usize> = (0..3).map(|_| rng.random_range(1..4)).collect();
            let classes = rng.random_range(1..4);
            let mut m = NbModel::new(vocab.clone(), classes).unwrap();
            for _ in 0..rng.random_range(0..12) {
                let x = random_instance(&mut rng, &vocab);
                m.update(&x, rng.random_range(0..classes)).unwrap();
            }
            let x = random_instance(&mut rng, &vocab);
            let selected: Vec<usize> = (0..3).filter(|_| rng.random_bool(0.6)).collect();
            let mut best = 0;
            for j in 1..classes {
                let (n1, d1) = rational_score(&m, &x, &selected, j);
                let (n0, d0) = rational_score(&m, &x, &selected, best);
                if n1 * d0 > n0 * d1 {
                    best = j;
                }
            }
            let p = m.predict(&x, &selected).unwrap();
            assert_eq!(p.class, best);
            assert!((p.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.posterior.iter().all(|&q| q > 0.0));
        }
    }
}
