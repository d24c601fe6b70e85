//! Categorical datasets read from delimited text.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassColumn {
    #[default]
    Last,
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub class_column: ClassColumn,
    pub missing_token: String,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: true,
            class_column: ClassColumn::Last,
            missing_token: "?".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingMode {
    /// Remove every row with a missing cell.
    #[default]
    Drop,
    /// Keep rows whose class is known; missing attribute values feed the
    /// incomplete-data moments.
    Keep,
}

impl fmt::Display for MissingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MissingMode::Drop => "drop",
            MissingMode::Keep => "keep",
        })
    }
}

impl FromStr for MissingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "drop" => Ok(MissingMode::Drop),
            "keep" => Ok(MissingMode::Keep),
            other => Err(Error::Config(format!("unknown missing mode {other:?} (expected drop or keep)"))),
        }
    }
}

/// Where a dataset came from and what was done to it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Option<String>,
    pub options: Option<LoadOptions>,
    pub missing: Option<MissingMode>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    /// Position among the data rows of the source, from 0.
    pub row: usize,
    pub values: Vec<Option<usize>>,
    pub class: Option<usize>,
}

impl Instance {
    pub fn has_missing(&self) -> bool {
        self.class.is_none() || self.values.iter().any(Option::is_none)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub attribute_names: Vec<String>,
    /// Per attribute, values in order of first appearance.
    pub vocabularies: Vec<Vec<String>>,
    pub class_name: String,
    pub class_vocabulary: Vec<String>,
    pub instances: Vec<Instance>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn attribute_count(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_vocabulary.len()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn vocab_sizes(&self) -> Vec<usize> {
        self.vocabularies.iter().map(Vec::len).collect()
    }

    /// Checks that every non-missing index lies inside its vocabulary.
    pub fn validate(&self) -> Result<()> {
        let a = self.attribute_count();
        if self.vocabularies.len() != a {
            return Err(Error::Input(format!("{a} attributes but {} vocabularies", self.vocabularies.len())));
        }
        for inst in &self.instances {
            if inst.values.len() != a {
                return Err(Error::Input(format!("row {} has {} values, expected {a}", inst.row, inst.values.len())));
            }
            for (k, v) in inst.values.iter().enumerate() {
                if matches!(v, Some(v) if *v >= self.vocabularies[k].len()) {
                    return Err(Error::Input(format!("row {} attribute {k} outside its vocabulary", inst.row)));
                }
            }
            if matches!(inst.class, Some(c) if c >= self.class_count()) {
                return Err(Error::Input(format!("row {} class outside the class vocabulary", inst.row)));
            }
        }
        Ok(())
    }
}

struct Vocab {
    index: HashMap<String, usize>,
    values: Vec<String>,
}

impl Vocab {
    fn new() -> Self {
        Self { index: HashMap::new(), values: Vec::new() }
    }

    fn intern(&mut self, v: &str) -> usize {
        if let Some(&k) = self.index.get(v) {
            return k;
        }
        self.values.push(v.to_string());
        self.index.insert(v.to_string(), self.values.len() - 1);
        self.values.len() - 1
    }
}

/// Reads a dataset from a file.
pub fn load_dataset(path: &Path, options: &LoadOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    let mut ds = parse_dataset(file, options)?;
    ds.provenance.source = Some(path.display().to_string());
    Ok(ds)
}

/// Reads a dataset from any reader.
pub fn parse_dataset<R: Read>(mut reader: R, options: &LoadOptions) -> Result<Dataset> {
    let mut text = Vec::new();
    reader.read_to_end(&mut text)?;
    let line_of = |rec: &csv::StringRecord| {
        // Record positions can point at blank lines preceding the record.
        let mut byte = rec.position().map_or(0, |p| p.byte() as usize).min(text.len());
        while byte < text.len() && matches!(text[byte], b'\n' | b'\r') {
            byte += 1;
        }
        1 + text[..byte].iter().filter(|&&b| b == b'\n').count() as u64
    };
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_slice());
    let mut records = rdr.records();
    let first = match records.next() {
        Some(r) => r?,
        None => return Err(Error::Parse { line: 1, message: "empty file".into() }),
    };
    let width = first.len();
    let header: Vec<String> = if options.has_header {
        first.iter().map(str::to_string).collect()
    } else {
        (0..width).map(|k| format!("column_{k}")).collect()
    };
    let class_col = match &options.class_column {
        ClassColumn::Last => width.checked_sub(1),
        ClassColumn::Index(k) => Some(*k).filter(|k| *k < width),
        ClassColumn::Name(n) => header.iter().position(|h| h == n),
    }
    .ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("class column {:?} not found among {width} columns", options.class_column),
    })?;
    if width < 1 {
        return Err(Error::Parse { line: 1, message: "no columns".into() });
    }

    let mut vocabs: Vec<Vocab> = (0..width).map(|_| Vocab::new()).collect();
    let mut rows: Vec<Vec<Option<usize>>> = Vec::new();
    let mut push = |rec: &csv::StringRecord, line: u64| -> Result<()> {
        if rec.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(k, v)| (v != options.missing_token).then(|| vocabs[k].intern(v)))
            .collect();
        rows.push(row);
        Ok(())
    };
    if !options.has_header {
        push(&first, 1)?;
    }
    for rec in records {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        push(&rec, line)?;
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 1, message: "no data rows".into() });
    }

    let attrs: Vec<usize> = (0..width).filter(|&k| k != class_col).collect();
    let instances = rows
        .into_iter()
        .enumerate()
        .map(|(row, cells)| Instance {
            row,
            values: attrs.iter().map(|&k| cells[k]).collect(),
            class: cells[class_col],
        })
        .collect();
    let mut vocabs: Vec<Option<Vocab>> = vocabs.into_iter().map(Some).collect();
    let class_vocabulary = vocabs[class_col].take().unwrap().values;
    Ok(Dataset {
        attribute_names: attrs.iter().map(|&k| header[k].clone()).collect(),
        vocabularies: attrs.iter().map(|&k| vocabs[k].take().unwrap().values).collect(),
        class_name: header[class_col].clone(),
        class_vocabulary,
        instances,
        provenance: Provenance {
            options: Some(options.clone()),
            ..Default::default()
        },
    })
}

/// Applies the missing-value policy, then a seeded uniform shuffle.
///
/// Vocabularies are left untouched, so they still describe the whole file.
pub fn prepare(dataset: &Dataset, mode: MissingMode, seed: u64) -> Dataset {
    let mut ds = dataset.clone();
    ds.instances.retain(|inst| match mode {
        MissingMode::Drop => !inst.has_missing(),
        MissingMode::Keep => inst.class.is_some(),
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ds.instances.shuffle(&mut rng);
    ds.provenance.missing = Some(mode);
    ds.provenance.seed = Some(seed);
    ds
}

/// FNV-1a hash of the source row order, as 16 hex digits.
pub fn order_hash(instances: &[Instance]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for inst in instances {
        for b in (inst.row as u64).to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}
