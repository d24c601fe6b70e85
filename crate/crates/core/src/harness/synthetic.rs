//! Seeded synthetic datasets with known relevant and irrelevant attributes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::dataset::{Dataset, Instance, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub instances: usize,
    /// Attributes that copy the class with probability `strength`.
    pub dependent: usize,
    /// Attributes drawn independently of the class.
    pub independent: usize,
    pub classes: usize,
    pub values: usize,
    pub strength: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            instances: 500,
            dependent: 5,
            independent: 5,
            classes: 2,
            values: 3,
            strength: 0.5,
        }
    }
}

/// Draws a dataset: uniform classes; a dependent attribute takes value
/// `(class + a) mod values` with probability `strength` and a uniform value
/// otherwise; independent attributes are uniform.
pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    if spec.classes == 0 || spec.values == 0 {
        return Err(Error::Config("synthetic data needs classes and values".into()));
    }
    if !(0.0..=1.0).contains(&spec.strength) {
        return Err(Error::Config(format!("strength must lie in [0, 1], got {}", spec.strength)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attrs = spec.dependent + spec.independent;
    let instances = (0..spec.instances)
        .map(|row| {
            let class = rng.random_range(0..spec.classes);
            let values = (0..attrs)
                .map(|a| {
                    let v = if a < spec.dependent && rng.random_bool(spec.strength) {
                        (class + a) % spec.values
                    } else {
                        rng.random_range(0..spec.values)
                    };
                    Some(v)
                })
                .collect();
            Instance { row, values, class: Some(class) }
        })
        .collect();
    let names = (0..spec.dependent)
        .map(|a| format!("dep_{a}"))
        .chain((0..spec.independent).map(|a| format!("noise_{a}")));
    Ok(Dataset {
        attribute_names: names.collect(),
        vocabularies: vec![(0..spec.values).map(|v| format!("v{v}")).collect(); attrs],
        class_name: "class".into(),
        class_vocabulary: (0..spec.classes).map(|c| format!("c{c}")).collect(),
        instances,
        provenance: Provenance {
            source: Some(format!("synthetic:{seed}")),
            ..Default::default()
        },
    })
}
