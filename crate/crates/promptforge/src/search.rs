//! Similarity-search classifier: retrieve the most relevant labeled
//! examples for a query, then pick the label whose neighbors carry the
//! most summed relevance.
//!
//! Relevance is bag-of-words cosine with sublinear term frequency. This is
//! a deliberately transparent stand-in for hosted semantic search: the
//! interface (retrieve, rank, score labels) is the contract, the
//! vectorizer behind it is swappable.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Label, LabeledExample, LabelSet};
use crate::error::{Error, Result};
use crate::text::{TermVector, Weighting};

/// A labeled training set prepared for similarity queries.
///
/// Immutable after construction; example vectors are precomputed so
/// classification does no per-query training work.
#[derive(Debug, Clone)]
pub struct SearchClassifierModel {
    examples: Vec<LabeledExample>,
    vectors: Vec<TermVector>,
    max_examples: usize,
    temperature: f64,
    label_set: LabelSet,
}

/// One retrieved neighbor with its bounded relevance score.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedNeighbor {
    pub example: LabeledExample,
    pub relevance: f64,
}

impl SearchClassifierModel {
    pub fn new(
        examples: Vec<LabeledExample>,
        max_examples: usize,
        temperature: f64,
        label_set: LabelSet,
    ) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::InvalidConfig(
                "search classifier needs at least one example".into(),
            ));
        }
        if max_examples == 0 {
            return Err(Error::InvalidConfig("max_examples must be positive".into()));
        }
        if !temperature.is_finite() || temperature < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "temperature must be a finite non-negative number, got {temperature}"
            )));
        }
        for example in &examples {
            if !label_set.contains(example.label()) {
                return Err(Error::UnknownLabel {
                    label: example.label().name().to_string(),
                    line: None,
                });
            }
        }
        let vectors = examples.iter().map(|e| vectorize(e.text())).collect();
        Ok(SearchClassifierModel {
            examples,
            vectors,
            max_examples,
            temperature,
            label_set,
        })
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn max_examples(&self) -> usize {
        self.max_examples
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn label_set(&self) -> &LabelSet {
        &self.label_set
    }
}

/// The model's term vector for a text: lowercased alphanumeric bag of
/// words with sublinear weights (1 + ln tf). Cosines between these vectors
/// are the relevance scores everywhere in this module.
pub fn vectorize(text: &str) -> TermVector {
    TermVector::from_text(text, Weighting::Sublinear)
}

/// Retrieve the `max_examples` most relevant examples for a query,
/// descending by relevance; equal relevances keep original example order.
/// Returns fewer when the model holds fewer examples.
pub fn rank_neighbors(model: &SearchClassifierModel, query: &str) -> Vec<RankedNeighbor> {
    let query_vector = vectorize(query);
    let mut scored: Vec<(usize, f64)> = model
        .vectors
        .iter()
        .map(|v| query_vector.cosine(v))
        .enumerate()
        .collect();
    // Stable sort keeps index order among equal relevances.
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("cosines are never NaN"));
    scored
        .into_iter()
        .take(model.max_examples.min(model.examples.len()))
        .map(|(index, relevance)| RankedNeighbor {
            example: model.examples[index].clone(),
            relevance,
        })
        .collect()
}

/// Summed neighbor relevance per label, in label-set order.
pub fn label_relevance(model: &SearchClassifierModel, neighbors: &[RankedNeighbor]) -> Vec<f64> {
    relevance_by_label(&model.label_set, neighbors)
}

fn relevance_by_label(label_set: &LabelSet, neighbors: &[RankedNeighbor]) -> Vec<f64> {
    let mut scores = vec![0.0; label_set.len()];
    for neighbor in neighbors {
        let position = label_set
            .position(neighbor.example.label())
            .expect("model construction validated labels");
        scores[position] += neighbor.relevance;
    }
    scores
}

/// Classify a query.
///
/// Temperature 0 takes the argmax over summed relevance with ties going to
/// the earlier label in the label set. Positive temperature samples from
/// softmax(score / temperature) with the caller's RNG. When every
/// neighbor has zero relevance the scores carry no signal, so the decision
/// falls back to the neighbors' majority label, and to the first label of
/// the set when the majority itself is tied.
pub fn classify(model: &SearchClassifierModel, query: &str, rng: &mut ChaCha8Rng) -> Label {
    let neighbors = rank_neighbors(model, query);
    decide(&model.label_set, model.temperature, &neighbors, rng)
}

/// Decision stage of `classify`, reusable against precomputed neighbors.
/// Taking the label set and temperature directly lets one ranking serve
/// many (temperature, neighbor-count) settings.
pub(crate) fn decide(
    label_set: &LabelSet,
    temperature: f64,
    neighbors: &[RankedNeighbor],
    rng: &mut ChaCha8Rng,
) -> Label {
    let scores = relevance_by_label(label_set, neighbors);
    let total: f64 = scores.iter().sum();

    if total == 0.0 {
        return majority_label(label_set, neighbors);
    }

    let index = if temperature == 0.0 {
        argmax(&scores)
    } else {
        softmax_sample(&scores, temperature, rng)
    };
    label_set.labels()[index].clone()
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn softmax_sample(scores: &[f64], temperature: f64, rng: &mut ChaCha8Rng) -> usize {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores
        .iter()
        .map(|s| ((s - max) / temperature).exp())
        .collect();
    let sum: f64 = weights.iter().sum();
    let mut draw = rng.gen_range(0.0..1.0) * sum;
    for (i, w) in weights.iter().enumerate() {
        if draw < *w {
            return i;
        }
        draw -= w;
    }
    weights.len() - 1
}

fn majority_label(label_set: &LabelSet, neighbors: &[RankedNeighbor]) -> Label {
    let mut counts = vec![0usize; label_set.len()];
    for neighbor in neighbors {
        let position = label_set
            .position(neighbor.example.label())
            .expect("model construction validated labels");
        counts[position] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0);
    let leaders: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] == top).collect();
    // A unique majority wins; any tie falls through to the first label.
    let index = if leaders.len() == 1 { leaders[0] } else { 0 };
    label_set.labels()[index].clone()
}

/// Fraction of examples the model labels correctly at its configured
/// temperature. One RNG drives all queries in order, so the result is
/// reproducible for a fixed seed.
pub fn accuracy(model: &SearchClassifierModel, queries: &[LabeledExample], seed: u64) -> f64 {
    use rand::SeedableRng;
    if queries.is_empty() {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let correct = queries
        .iter()
        .filter(|q| classify(model, q.text(), &mut rng) == *q.label())
        .count();
    correct as f64 / queries.len() as f64
}
