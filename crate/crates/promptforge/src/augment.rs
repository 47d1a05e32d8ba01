//! Training-set augmentation: ask a completion backend to produce new
//! questions in the style of three randomly drawn seed examples, label the
//! output with the seeds' shared label, and append until the requested
//! count is reached.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::backend::{CompletionBackend, CompletionRequest};
use crate::data::{Label, LabeledExample, Origin};
use crate::error::{Error, Result};

/// Output cap for one generated question.
const GENERATION_MAX_TOKENS: usize = 64;
/// Sampling temperature for generation calls. Only the remote backend
/// interprets it; the simulator derives variety from the prompt itself.
const GENERATION_TEMPERATURE: f64 = 0.9;
/// How many fresh draws a duplicate is allowed to burn before being
/// accepted anyway.
const DEDUP_ATTEMPTS: usize = 30;

/// What to generate and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentationSpec {
    /// Number of examples to append to the training set.
    pub n_to_add: usize,
    /// Spread generated examples evenly across the labels present in the
    /// training set (requires divisibility); otherwise labels are drawn
    /// uniformly at random.
    pub per_label: bool,
    /// Seed for triplet selection and label draws.
    pub seed: u64,
    /// Redraw when a generated text duplicates one already in the set.
    pub dedup: bool,
}

impl AugmentationSpec {
    /// Defaults: balanced across labels, dedup on.
    pub fn new(n_to_add: usize, seed: u64) -> Self {
        AugmentationSpec {
            n_to_add,
            per_label: true,
            seed,
            dedup: true,
        }
    }
}

/// An augmented training set: the original examples followed by the
/// generated ones, plus how many duplicates had to be accepted because
/// redraws kept colliding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedSet {
    pub examples: Vec<LabeledExample>,
    pub duplicate_warnings: usize,
}

/// Build the generation prompt for one seed triplet:
///
/// ```text
/// Generate a similar question:
/// Q: <seed 1>
/// Q: <seed 2>
/// Q: <seed 3>
/// Q:
/// ```
///
/// All three seeds must carry the same label; the completion slot is the
/// final bare "Q:" line.
pub fn build_generation_prompt(seeds: &[LabeledExample]) -> Result<String> {
    if seeds.len() != 3 {
        return Err(Error::BadSeedCount(seeds.len()));
    }
    let first = seeds[0].label();
    for seed in &seeds[1..] {
        if seed.label() != first {
            return Err(Error::MixedSeedLabels {
                first: first.name().to_string(),
                second: seed.label().name().to_string(),
            });
        }
    }
    let mut prompt = String::from("Generate a similar question:\n");
    for seed in seeds {
        prompt.push_str("Q: ");
        prompt.push_str(seed.text());
        prompt.push('\n');
    }
    prompt.push_str("Q:");
    Ok(prompt)
}

/// First line of a completion, with an echoed "Q:" prefix and surrounding
/// whitespace removed. Empty means the backend produced nothing usable.
fn clean_completion(raw: &str) -> String {
    let first_line = raw.lines().next().unwrap_or("").trim();
    let stripped = first_line.strip_prefix("Q:").unwrap_or(first_line);
    stripped.trim().to_string()
}

/// Generate one example of `label` from a random seed triplet.
///
/// The triplet is drawn uniformly without replacement from the training
/// examples of that label; successive calls draw independently, so the
/// same seed can appear in many triplets. An empty cleaned completion is
/// retried once with a fresh triplet before erroring.
pub fn generate_example(
    backend: &dyn CompletionBackend,
    train: &[LabeledExample],
    label: &Label,
    rng: &mut ChaCha8Rng,
) -> Result<LabeledExample> {
    let of_label: Vec<&LabeledExample> = train.iter().filter(|e| e.label() == label).collect();
    if of_label.len() < 3 {
        return Err(Error::InsufficientExamples {
            label: label.name().to_string(),
            needed: 3,
            available: of_label.len(),
        });
    }

    for attempt in 0..2 {
        let indices = sample(rng, of_label.len(), 3);
        let seeds: Vec<LabeledExample> = indices.iter().map(|i| of_label[i].clone()).collect();
        let prompt = build_generation_prompt(&seeds)?;
        let request =
            CompletionRequest::generation(prompt, GENERATION_MAX_TOKENS, GENERATION_TEMPERATURE)?;
        let response = backend.complete(&request)?;
        let text = clean_completion(&response.text);
        if text.is_empty() {
            if attempt == 0 {
                continue;
            }
            return Err(Error::EmptyCompletion);
        }
        return LabeledExample::new(text, label.clone(), Origin::Generated);
    }
    unreachable!("loop returns on success, error, or second empty attempt")
}

/// Distinct labels of a training set, in order of first appearance.
fn labels_in(train: &[LabeledExample]) -> Vec<Label> {
    let mut labels = Vec::new();
    for example in train {
        if !labels.contains(example.label()) {
            labels.push(example.label().clone());
        }
    }
    labels
}

/// Append `spec.n_to_add` generated examples to a training set.
///
/// The original examples are preserved, in order, at the front. With
/// dedup on, a generated text that collides with any text already in the
/// set is redrawn a bounded number of times; a collision that survives
/// every redraw is kept and counted in `duplicate_warnings`.
pub fn augment_training_set(
    backend: &dyn CompletionBackend,
    train: &[LabeledExample],
    spec: &AugmentationSpec,
) -> Result<AugmentedSet> {
    let labels = labels_in(train);
    if spec.n_to_add > 0 && labels.is_empty() {
        return Err(Error::InvalidConfig(
            "cannot augment an empty training set".into(),
        ));
    }
    if spec.per_label && spec.n_to_add % labels.len().max(1) != 0 {
        return Err(Error::InvalidConfig(format!(
            "n_to_add {} is not divisible by the {} labels in the training set",
            spec.n_to_add,
            labels.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut examples = train.to_vec();
    let mut seen: BTreeSet<String> = train.iter().map(|e| e.text().to_string()).collect();
    let mut duplicate_warnings = 0;

    for i in 0..spec.n_to_add {
        let label = if spec.per_label {
            labels[i % labels.len()].clone()
        } else {
            labels[rng.gen_range(0..labels.len())].clone()
        };
        let mut accepted = None;
        let mut last_collision = None;
        for _ in 0..=DEDUP_ATTEMPTS {
            let candidate = generate_example(backend, train, &label, &mut rng)?;
            if !spec.dedup || seen.insert(candidate.text().to_string()) {
                accepted = Some(candidate);
                break;
            }
            last_collision = Some(candidate);
        }
        let example = match accepted {
            Some(e) => e,
            None => {
                // Every redraw collided; keep the last draw and flag it.
                duplicate_warnings += 1;
                last_collision.expect("at least one draw happened")
            }
        };
        examples.push(example);
    }

    Ok(AugmentedSet {
        examples,
        duplicate_warnings,
    })
}
