//! Prompt-pattern classification: lay out in-context example-label pairs
//! in a fixed question-topic pattern, ask the backend for exactly one
//! restricted token, and read the answer back as a label.
//!
//! The ordered list of in-context examples is a [`Candidate`]: the unit
//! the genetic optimizer breeds. Allele order is part of the genome and
//! is preserved verbatim in the prompt.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::backend::{CompletionBackend, CompletionRequest, MAX_PROMPT_TOKENS};
use crate::data::{Label, LabeledExample, LabelSet};
use crate::error::{Error, Result};
use crate::text::estimate_tokens;

const QUESTION_PREFIX: &str = "Question:";
const LABEL_PREFIX: &str = "Topic:";

/// An ordered set of in-context examples plus its cached evaluation score.
///
/// Two invariants hold for every candidate: at least one allele, and no
/// two alleles with the same text. Fitness is an optional cache of the
/// candidate's validation accuracy; any operation that changes the allele
/// list must clear it.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    alleles: Vec<LabeledExample>,
    fitness: Option<f64>,
}

impl Candidate {
    pub fn new(alleles: Vec<LabeledExample>) -> Result<Self> {
        if alleles.is_empty() {
            return Err(Error::InvalidConfig(
                "candidate needs at least one allele".into(),
            ));
        }
        for (i, allele) in alleles.iter().enumerate() {
            if alleles[..i].iter().any(|a| a.text() == allele.text()) {
                return Err(Error::DuplicateAllele {
                    text: allele.text().to_string(),
                });
            }
        }
        Ok(Candidate {
            alleles,
            fitness: None,
        })
    }

    /// Draw a random candidate from a training set: an equal number of
    /// distinct examples per label, order shuffled so position is part of
    /// the random genome.
    pub fn sample(
        train: &[LabeledExample],
        n_alleles: usize,
        label_set: &LabelSet,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if n_alleles == 0 || n_alleles % label_set.len() != 0 {
            return Err(Error::InvalidConfig(format!(
                "allele count {n_alleles} must be a positive multiple of the {} labels",
                label_set.len()
            )));
        }
        let per_label = n_alleles / label_set.len();
        let mut alleles = Vec::with_capacity(n_alleles);
        for label in label_set.iter() {
            let of_label: Vec<&LabeledExample> =
                train.iter().filter(|e| e.label() == label).collect();
            if of_label.len() < per_label {
                return Err(Error::InsufficientExamples {
                    label: label.name().to_string(),
                    needed: per_label,
                    available: of_label.len(),
                });
            }
            for index in sample(rng, of_label.len(), per_label) {
                alleles.push(of_label[index].clone());
            }
        }
        alleles.shuffle(rng);
        Candidate::new(alleles)
    }

    pub fn alleles(&self) -> &[LabeledExample] {
        &self.alleles
    }

    pub fn fitness(&self) -> Option<f64> {
        self.fitness
    }

    pub fn set_fitness(&mut self, fitness: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&fitness) {
            return Err(Error::InvalidConfig(format!(
                "fitness must lie in [0, 1], got {fitness}"
            )));
        }
        self.fitness = Some(fitness);
        Ok(())
    }

    pub fn clear_fitness(&mut self) {
        self.fitness = None;
    }

    /// Replace the allele list wholesale, re-validating invariants and
    /// dropping any cached fitness.
    pub fn replace_alleles(&mut self, alleles: Vec<LabeledExample>) -> Result<()> {
        *self = Candidate::new(alleles)?;
        Ok(())
    }

    /// Stable cache key over the ordered allele texts. Labels ride along
    /// so two candidates that disagree only on a label stay distinct.
    pub fn cache_key(&self) -> String {
        let mut key = String::new();
        for allele in &self.alleles {
            key.push_str(allele.text());
            key.push('\x1f');
            key.push_str(allele.label().name());
            key.push('\x1e');
        }
        key
    }
}

/// The fixed classification prompt layout: optional header, then
/// "Question:" / "Topic:" pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    header: Option<String>,
}

impl PromptTemplate {
    /// A template with the given header line, or none for a bare pattern.
    /// An empty header is rejected: drop it instead.
    pub fn new(header: Option<String>) -> Result<Self> {
        if let Some(h) = &header {
            if h.trim().is_empty() {
                return Err(Error::InvalidConfig(
                    "header must be non-empty; use a headerless template instead".into(),
                ));
            }
        }
        Ok(PromptTemplate { header })
    }

    /// The default header for a label set, e.g. for labels Data and Other:
    /// "Decide whether the topic of the question is 'Data' or 'Other'".
    pub fn for_labels(label_set: &LabelSet) -> Self {
        let names: Vec<String> = label_set.iter().map(|l| format!("'{}'", l.name())).collect();
        let joined = match names.len() {
            1 => names[0].clone(),
            2 => format!("{} or {}", names[0], names[1]),
            _ => format!(
                "{} or {}",
                names[..names.len() - 1].join(", "),
                names[names.len() - 1]
            ),
        };
        PromptTemplate {
            header: Some(format!(
                "Decide whether the topic of the question is {joined}"
            )),
        }
    }

    pub fn headerless() -> Self {
        PromptTemplate { header: None }
    }

    pub fn header(&self) -> Option<&str> {
        self.header.as_deref()
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate::for_labels(&LabelSet::data_other())
    }
}

/// Render the classification prompt:
///
/// ```text
/// <header>
/// Question: <allele 1 text>
/// Topic: <allele 1 label>
/// ...
/// Question: <query>
/// Topic:
/// ```
///
/// The final "Topic:" is left open for the backend to fill. Exceeding the
/// prompt token budget is an error naming the estimate.
pub fn build_prompt(template: &PromptTemplate, candidate: &Candidate, query: &str) -> Result<String> {
    let mut prompt = String::new();
    if let Some(header) = template.header() {
        prompt.push_str(header);
        prompt.push('\n');
    }
    for allele in candidate.alleles() {
        prompt.push_str(QUESTION_PREFIX);
        prompt.push(' ');
        prompt.push_str(allele.text());
        prompt.push('\n');
        prompt.push_str(LABEL_PREFIX);
        prompt.push(' ');
        prompt.push_str(allele.label().name());
        prompt.push('\n');
    }
    prompt.push_str(QUESTION_PREFIX);
    prompt.push(' ');
    prompt.push_str(query);
    prompt.push('\n');
    prompt.push_str(LABEL_PREFIX);

    let estimated = estimate_tokens(&prompt);
    if estimated > MAX_PROMPT_TOKENS {
        return Err(Error::TokenBudget {
            estimated,
            limit: MAX_PROMPT_TOKENS,
        });
    }
    Ok(prompt)
}

/// Classify one query: render the prompt, request a single token
/// restricted to the label names, parse it back into a label.
pub fn classify(
    backend: &dyn CompletionBackend,
    template: &PromptTemplate,
    candidate: &Candidate,
    query: &str,
    label_set: &LabelSet,
    temperature: f64,
) -> Result<Label> {
    let prompt = build_prompt(template, candidate, query)?;
    let request = CompletionRequest::restricted(prompt, temperature, label_set.names())?;
    let response = backend.complete(&request)?;
    label_set.parse(&response.text, None)
}

/// Fraction of an evaluation set this candidate classifies correctly.
/// Any classification error discards the partial result.
pub fn accuracy(
    backend: &dyn CompletionBackend,
    template: &PromptTemplate,
    candidate: &Candidate,
    eval_set: &[LabeledExample],
    label_set: &LabelSet,
    temperature: f64,
) -> Result<f64> {
    if eval_set.is_empty() {
        return Err(Error::InvalidConfig(
            "accuracy needs a non-empty evaluation set".into(),
        ));
    }
    let mut correct = 0usize;
    for item in eval_set {
        let predicted = classify(backend, template, candidate, item.text(), label_set, temperature)?;
        if predicted == *item.label() {
            correct += 1;
        }
    }
    Ok(correct as f64 / eval_set.len() as f64)
}
