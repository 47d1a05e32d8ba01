//! Deterministic offline completion engine.
//!
//! The simulator is a pure function of (seed, request): it derives a
//! per-request PRNG from a stable fingerprint of both, so repeated calls
//! and concurrent calls agree bit-for-bit. Two behaviours cover everything
//! the crate needs offline:
//!
//! - unrestricted requests get a 5-15 word question recombined from the
//!   prompt's own words via a bigram chain, which keeps generated text
//!   lexically correlated with its seed examples;
//! - restricted requests are answered by scoring each allowed token with
//!   the summed bag-of-words cosine between the prompt's trailing query
//!   block and the in-context examples carrying that token, then taking
//!   the argmax (temperature 0) or a softmax sample (temperature > 0).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

use super::{CompletionBackend, CompletionRequest, CompletionResponse, FinishReason};
use crate::error::Result;
use crate::text::{estimate_tokens, tokenize, TermVector, Weighting};

/// Vocabulary of last resort when a prompt carries no usable words.
const FALLBACK_WORDS: &[&str] = &[
    "what", "is", "this", "about", "here", "now", "really", "then", "why", "how",
];

/// Offline stand-in for a hosted completion engine.
#[derive(Debug, Clone)]
pub struct SimulatedBackend {
    seed: u64,
}

impl SimulatedBackend {
    pub fn new(seed: u64) -> Self {
        SimulatedBackend { seed }
    }

    fn rng_for(&self, request: &CompletionRequest) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(fingerprint(self.seed, request))
    }
}

impl CompletionBackend for SimulatedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse> {
        let mut rng = self.rng_for(request);
        match request.allowed_tokens() {
            Some(tokens) => Ok(restricted_decode(
                request.prompt(),
                tokens,
                request.temperature(),
                &mut rng,
            )),
            None => Ok(generate(request, &mut rng)),
        }
    }
}

/// Stable 64-bit FNV-1a fingerprint of the seed and every request field.
/// Field boundaries are marked so ("ab","c") and ("a","bc") differ.
fn fingerprint(seed: u64, request: &CompletionRequest) -> u64 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;
    let mut hash = OFFSET;
    let mut write = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= u64::from(b);
            hash = hash.wrapping_mul(PRIME);
        }
        hash ^= 0xff;
        hash = hash.wrapping_mul(PRIME);
    };
    write(&seed.to_le_bytes());
    write(request.prompt().as_bytes());
    write(&(request.max_tokens() as u64).to_le_bytes());
    write(&request.temperature().to_bits().to_le_bytes());
    for tokens in [request.allowed_tokens(), request.stop_sequences()] {
        match tokens {
            None => write(&[0]),
            Some(ts) => {
                write(&[1]);
                for t in ts {
                    write(t.as_bytes());
                }
            }
        }
    }
    hash
}

/// Recombine the prompt's words into a new question.
///
/// Lines of the form "tag: content" contribute only their content, so
/// instruction headers and bare "Q:" cues stay out of the vocabulary. The
/// chain walks observed word bigrams and falls back to a uniform vocabulary
/// draw at dead ends. Output is truncated to max_tokens when necessary; a
/// truncated question keeps no trailing "?" so the cut is visible.
fn generate(request: &CompletionRequest, rng: &mut ChaCha8Rng) -> CompletionResponse {
    let mut starts: Vec<String> = Vec::new();
    let mut transitions: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut vocab_set: BTreeSet<String> = BTreeSet::new();

    for line in request.prompt().lines() {
        let content = match line.split_once(':') {
            Some((_, rest)) => rest,
            None => line,
        };
        let words = tokenize(content);
        if words.is_empty() {
            continue;
        }
        starts.push(words[0].clone());
        for pair in words.windows(2) {
            transitions
                .entry(pair[0].clone())
                .or_default()
                .push(pair[1].clone());
        }
        vocab_set.extend(words);
    }

    let vocab: Vec<String> = if vocab_set.is_empty() {
        FALLBACK_WORDS.iter().map(|w| w.to_string()).collect()
    } else {
        vocab_set.into_iter().collect()
    };
    if starts.is_empty() {
        starts = vocab.clone();
    }

    let target_len = rng.gen_range(5..=15);
    let mut words = Vec::with_capacity(target_len);
    let mut current = starts[rng.gen_range(0..starts.len())].clone();
    words.push(current.clone());
    while words.len() < target_len {
        let next = match transitions.get(&current).filter(|v| !v.is_empty()) {
            Some(successors) => successors[rng.gen_range(0..successors.len())].clone(),
            None => vocab[rng.gen_range(0..vocab.len())].clone(),
        };
        words.push(next.clone());
        current = next;
    }

    let mut text = words.join(" ");
    let mut first = text.chars();
    if let Some(c) = first.next() {
        text = c.to_uppercase().collect::<String>() + first.as_str();
    }
    text.push('?');

    if estimate_tokens(&text) > request.max_tokens() {
        // Drop trailing words until the estimate fits; at least one stays.
        let mut kept: Vec<&str> = text.trim_end_matches('?').split(' ').collect();
        while kept.len() > 1 && estimate_tokens(&kept.join(" ")) > request.max_tokens() {
            kept.pop();
        }
        return CompletionResponse {
            text: kept.join(" "),
            finish_reason: FinishReason::Length,
        };
    }

    CompletionResponse {
        text,
        finish_reason: FinishReason::Stop,
    }
}

/// One in-context example block and the allowed token on its label line.
struct Block {
    token_index: usize,
    vector: TermVector,
}

/// Split a prompt into labeled example blocks and the trailing query block.
///
/// A line is a label line when the text after its last ':' (trimmed) is a
/// member of `allowed`; everything accumulated since the previous label
/// line, plus the label line's own prefix, forms that example's block.
/// Whatever remains after the last label line is the query.
fn split_blocks(prompt: &str, allowed: &[String]) -> (Vec<Block>, TermVector) {
    let mut blocks = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    for line in prompt.lines() {
        let label = line
            .rsplit_once(':')
            .and_then(|(prefix, suffix)| {
                let candidate = suffix.trim();
                allowed
                    .iter()
                    .position(|t| t == candidate)
                    .map(|i| (prefix, i))
            });
        match label {
            Some((prefix, token_index)) => {
                pending.push(prefix.to_string());
                let body = pending.join("\n");
                blocks.push(Block {
                    token_index,
                    vector: TermVector::from_text(&body, Weighting::Raw),
                });
                pending.clear();
            }
            None => pending.push(line.to_string()),
        }
    }
    let query = TermVector::from_text(&pending.join("\n"), Weighting::Raw);
    (blocks, query)
}

/// Per-token relevance scores for a restricted prompt: the sum of cosines
/// between the query block and each example block carrying that token.
pub(crate) fn label_scores(prompt: &str, allowed: &[String]) -> Vec<f64> {
    let (blocks, query) = split_blocks(prompt, allowed);
    let mut scores = vec![0.0; allowed.len()];
    for block in blocks {
        scores[block.token_index] += query.cosine(&block.vector);
    }
    scores
}

fn restricted_decode(
    prompt: &str,
    allowed: &[String],
    temperature: f64,
    rng: &mut ChaCha8Rng,
) -> CompletionResponse {
    let scores = label_scores(prompt, allowed);
    let total: f64 = scores.iter().sum();

    let index = if temperature == 0.0 {
        // Argmax; ties and all-zero scores resolve to the earliest token.
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        best
    } else if total == 0.0 {
        // Nothing to condition on: uniform draw.
        rng.gen_range(0..allowed.len())
    } else {
        // Softmax over score / temperature, sampled by inverse CDF.
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = scores
            .iter()
            .map(|s| ((s - max) / temperature).exp())
            .collect();
        let sum: f64 = weights.iter().sum();
        let mut draw = rng.gen_range(0.0..1.0) * sum;
        let mut chosen = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if draw < *w {
                chosen = i;
                break;
            }
            draw -= w;
        }
        chosen
    };

    CompletionResponse {
        text: allowed[index].clone(),
        finish_reason: FinishReason::Restricted,
    }
}
