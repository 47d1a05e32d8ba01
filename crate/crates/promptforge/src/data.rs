//! Labeled short-text corpora: labels, examples, JSONL persistence, and
//! class-balanced train/validation/test splits.
//!
//! Everything in this module is immutable after construction and safe to
//! share across threads. Split construction is a pure function of its seed.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A class label drawn from a closed label set.
///
/// Canonicalization trims surrounding whitespace and preserves case, so
/// `"data"` and `"Data"` are different labels. Label names double as decode
/// targets for restricted completion, which is why case must survive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(String);

impl Label {
    /// Create a label from a raw name. Whitespace is trimmed; the result
    /// must be non-empty.
    pub fn new(name: impl AsRef<str>) -> Result<Self> {
        let trimmed = name.as_ref().trim();
        if trimmed.is_empty() {
            return Err(Error::EmptyLabel);
        }
        Ok(Label(trimmed.to_string()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The ordered, duplicate-free set of labels a task recognizes.
///
/// Order matters: it is the documented tie-break order for classifiers and
/// the order in which restricted decode tokens are offered to a backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet(Vec<Label>);

impl LabelSet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut labels = Vec::new();
        for name in names {
            let label = Label::new(name)?;
            if labels.contains(&label) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate label {:?} in label set",
                    label.name()
                )));
            }
            labels.push(label);
        }
        if labels.is_empty() {
            return Err(Error::InvalidConfig("label set is empty".into()));
        }
        Ok(LabelSet(labels))
    }

    /// The two-class label set used throughout the question-topic case study.
    pub fn data_other() -> Self {
        LabelSet::new(["Data", "Other"]).expect("static label set")
    }

    /// Validate a raw string against this set, reporting the offending line
    /// number when parsing a file.
    pub fn parse(&self, raw: &str, line: Option<usize>) -> Result<Label> {
        let label = Label::new(raw)?;
        if self.0.contains(&label) {
            Ok(label)
        } else {
            Err(Error::UnknownLabel {
                label: label.0,
                line,
            })
        }
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.0.contains(label)
    }

    pub fn labels(&self) -> &[Label] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Label> {
        self.0.iter()
    }

    /// Position of a label in the set order, if present.
    pub fn position(&self, label: &Label) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    /// Label names in set order, cloned. Handy for restricted decode sets.
    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(|l| l.0.clone()).collect()
    }
}

/// Where an example came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    /// Collected or hand-written; part of the original corpus.
    Seed,
    /// Produced by a completion backend from a seed triplet.
    Generated,
    /// Injected from outside the corpus, e.g. by an external curation step.
    Immigrant,
}

/// A short text paired with its class label; the atomic unit everywhere,
/// including as an allele inside a prompt candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    text: String,
    label: Label,
    #[serde(default = "default_origin", skip_serializing)]
    origin: Origin,
}

fn default_origin() -> Origin {
    Origin::Seed
}

impl LabeledExample {
    /// Build an example. Text is trimmed and must be non-empty afterwards.
    pub fn new(text: impl AsRef<str>, label: Label, origin: Origin) -> Result<Self> {
        let trimmed = text.as_ref().trim();
        if trimmed.is_empty() {
            return Err(Error::EmptyText);
        }
        Ok(LabeledExample {
            text: trimmed.to_string(),
            label,
            origin,
        })
    }

    /// Shorthand for a seed example.
    pub fn seed(text: impl AsRef<str>, label: Label) -> Result<Self> {
        LabeledExample::new(text, label, Origin::Seed)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn label(&self) -> &Label {
        &self.label
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }
}

/// On-disk JSONL record. Unknown extra keys are ignored on load and never
/// written on save; `origin` is accepted on load but not persisted.
#[derive(Deserialize)]
struct RawRecord {
    text: String,
    label: String,
    #[serde(default)]
    origin: Option<String>,
}

#[derive(Serialize)]
struct OutRecord<'a> {
    text: &'a str,
    label: &'a str,
}

/// Load labeled examples from a JSONL file (one JSON object per line).
///
/// Records appear in file order. Blank lines are rejected as malformed;
/// every label is validated against `label_set` and errors carry the
/// 1-based line number.
pub fn load_jsonl(path: impl AsRef<Path>, label_set: &LabelSet) -> Result<Vec<LabeledExample>> {
    let path = path.as_ref();
    let file =
        File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let reader = BufReader::new(file);
    let mut examples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            return Err(Error::MalformedRecord {
                line: line_no,
                message: "blank line".into(),
            });
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: line_no,
            message: e.to_string(),
        })?;
        let label = label_set.parse(&raw.label, Some(line_no))?;
        let origin = match raw.origin.as_deref() {
            None => Origin::Seed,
            Some(o) => match o.to_ascii_lowercase().as_str() {
                "seed" => Origin::Seed,
                "generated" => Origin::Generated,
                "immigrant" => Origin::Immigrant,
                other => {
                    return Err(Error::MalformedRecord {
                        line: line_no,
                        message: format!("unknown origin {other:?}"),
                    })
                }
            },
        };
        let example =
            LabeledExample::new(&raw.text, label, origin).map_err(|e| Error::MalformedRecord {
                line: line_no,
                message: e.to_string(),
            })?;
        examples.push(example);
    }
    if examples.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    Ok(examples)
}

/// Save examples as JSONL with keys `text` and `label`, one object per line.
///
/// Loading the result back yields the same `(text, label)` sequence.
pub fn save_jsonl(examples: &[LabeledExample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file =
        File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    let mut writer = BufWriter::new(file);
    for example in examples {
        let record = OutRecord {
            text: &example.text,
            label: example.label.name(),
        };
        let json = serde_json::to_string(&record).expect("record serialization");
        writeln!(writer, "{json}")
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Requested sizes for the three splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn new(train: usize, validation: usize, test: usize) -> Self {
        SplitSizes {
            train,
            validation,
            test,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }
}

/// Train/validation/test splits with their label set.
///
/// Construction enforces the class-balance and disjointness invariants:
/// each split holds the same number of examples per label, and no text
/// appears in more than one split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetBundle {
    pub train: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    pub label_set: LabelSet,
}

impl DatasetBundle {
    pub fn new(
        train: Vec<LabeledExample>,
        validation: Vec<LabeledExample>,
        test: Vec<LabeledExample>,
        label_set: LabelSet,
    ) -> Result<Self> {
        let bundle = DatasetBundle {
            train,
            validation,
            test,
            label_set,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    fn validate(&self) -> Result<()> {
        for (name, split) in [
            ("train", &self.train),
            ("validation", &self.validation),
            ("test", &self.test),
        ] {
            let counts = label_counts(split, &self.label_set)?;
            let first = counts[0];
            if counts.iter().any(|&c| c != first) {
                return Err(Error::InvalidConfig(format!(
                    "{name} split is not class-balanced: per-label counts {counts:?}"
                )));
            }
        }
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for example in self
            .train
            .iter()
            .chain(&self.validation)
            .chain(&self.test)
        {
            if !seen.insert(example.text()) {
                return Err(Error::DuplicatePoolText {
                    text: example.text().to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Per-label example counts in `label_set` order. Errors on labels outside
/// the set.
pub fn label_counts(examples: &[LabeledExample], label_set: &LabelSet) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; label_set.len()];
    for example in examples {
        match label_set.position(example.label()) {
            Some(i) => counts[i] += 1,
            None => {
                return Err(Error::UnknownLabel {
                    label: example.label().name().to_string(),
                    line: None,
                })
            }
        }
    }
    Ok(counts)
}

/// Build class-balanced, disjoint train/validation/test splits from a pool.
///
/// Each per-label sublist is shuffled with a PRNG derived from `seed` and
/// the splits take consecutive prefixes, so the result is reproducible
/// bit-for-bit for a fixed seed. Duplicate texts in the pool are rejected
/// up front to rule out leakage between splits.
pub fn make_splits(
    pool: &[LabeledExample],
    label_set: &LabelSet,
    sizes: SplitSizes,
    seed: u64,
) -> Result<DatasetBundle> {
    let n_labels = label_set.len();
    for size in [sizes.train, sizes.validation, sizes.test] {
        if size % n_labels != 0 {
            return Err(Error::UnevenSplit {
                size,
                labels: n_labels,
            });
        }
    }

    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for example in pool {
        if !seen.insert(example.text()) {
            return Err(Error::DuplicatePoolText {
                text: example.text().to_string(),
            });
        }
    }

    let per_label_total = sizes.total() / n_labels;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits: [Vec<LabeledExample>; 3] = [Vec::new(), Vec::new(), Vec::new()];

    for label in label_set.iter() {
        let mut of_label: Vec<&LabeledExample> =
            pool.iter().filter(|e| e.label() == label).collect();
        if of_label.len() < per_label_total {
            return Err(Error::InsufficientExamples {
                label: label.name().to_string(),
                needed: per_label_total,
                available: of_label.len(),
            });
        }
        of_label.shuffle(&mut rng);
        let mut cursor = 0;
        for (slot, take) in [
            sizes.train / n_labels,
            sizes.validation / n_labels,
            sizes.test / n_labels,
        ]
        .into_iter()
        .enumerate()
        {
            splits[slot].extend(of_label[cursor..cursor + take].iter().map(|e| (*e).clone()));
            cursor += take;
        }
    }

    let [train, validation, test] = splits;
    DatasetBundle::new(train, validation, test, label_set.clone())
}
