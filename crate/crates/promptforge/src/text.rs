//! Tokenization and bag-of-words vector arithmetic shared by the
//! similarity classifier and the simulated backend.

use std::collections::BTreeMap;

/// Split text into lowercase alphanumeric word tokens.
///
/// Any run of non-alphanumeric characters separates tokens, so punctuation
/// never leaks into the vocabulary and `"SQL?"` and `"sql"` agree.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

/// Estimated token count for budget checks: one token per four characters,
/// rounded up. Counts characters, not bytes, so multibyte text is not
/// over-charged.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

/// How raw term counts are turned into weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Weight = raw count.
    Raw,
    /// Weight = 1 + ln(count); dampens repeated words so one echoed term
    /// cannot dominate a short question.
    #[default]
    Sublinear,
}

/// A sparse term-weight vector over the token vocabulary.
///
/// Keys iterate in sorted order (BTreeMap), which keeps every dot product
/// and norm a fixed summation order and the whole pipeline reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct TermVector {
    weights: BTreeMap<String, f64>,
    norm: f64,
}

impl TermVector {
    /// Build a vector from text under the given weighting scheme.
    pub fn from_text(text: &str, weighting: Weighting) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for token in tokenize(text) {
            *counts.entry(token).or_insert(0) += 1;
        }
        let mut weights = BTreeMap::new();
        for (token, count) in counts {
            let w = match weighting {
                Weighting::Raw => count as f64,
                Weighting::Sublinear => 1.0 + (count as f64).ln(),
            };
            weights.insert(token, w);
        }
        let norm = weights.values().map(|w| w * w).sum::<f64>().sqrt();
        TermVector { weights, norm }
    }

    pub fn is_zero(&self) -> bool {
        self.norm == 0.0
    }

    pub fn weight(&self, token: &str) -> f64 {
        self.weights.get(token).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Cosine similarity in [0, 1]. Zero vectors have similarity 0 to
    /// everything; the result is clamped so float rounding can never
    /// report a value above 1.
    pub fn cosine(&self, other: &TermVector) -> f64 {
        if self.is_zero() || other.is_zero() {
            return 0.0;
        }
        let (small, large) = if self.weights.len() <= other.weights.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut dot = 0.0;
        for (token, w) in &small.weights {
            if let Some(v) = large.weights.get(token) {
                dot += w * v;
            }
        }
        (dot / (self.norm * other.norm)).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tokenize_lowercases_and_strips_punctuation() {
        assert_eq!(
            tokenize("What is SQL, really?"),
            vec!["what", "is", "sql", "really"]
        );
    }

    #[test]
    fn tokenize_empty_and_punctuation_only() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("?!... --").is_empty());
    }

    #[test]
    fn tokenize_keeps_digits() {
        assert_eq!(tokenize("top-10 rows"), vec!["top", "10", "rows"]);
    }

    #[test]
    fn estimate_rounds_up() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("abc"), 1);
        assert_eq!(estimate_tokens("abcd"), 1);
        assert_eq!(estimate_tokens("abcde"), 2);
    }

    #[test]
    fn estimate_counts_chars_not_bytes() {
        // Four two-byte characters is still one estimated token.
        assert_eq!(estimate_tokens("éééé"), 1);
    }

    #[test]
    fn identical_text_has_cosine_one() {
        let v = TermVector::from_text("what is a database index?", Weighting::Sublinear);
        assert_relative_eq!(v.cosine(&v), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn disjoint_text_has_cosine_zero() {
        let a = TermVector::from_text("red green blue", Weighting::Raw);
        let b = TermVector::from_text("one two three", Weighting::Raw);
        assert_eq!(a.cosine(&b), 0.0);
    }

    #[test]
    fn zero_vector_similar_to_nothing() {
        let z = TermVector::from_text("?!", Weighting::Raw);
        let v = TermVector::from_text("hello", Weighting::Raw);
        assert!(z.is_zero());
        assert_eq!(z.cosine(&v), 0.0);
        assert_eq!(z.cosine(&z), 0.0);
    }

    #[test]
    fn known_raw_cosine_value() {
        // "a b" vs "a c": dot = 1, norms = sqrt(2) each, cosine = 0.5.
        let a = TermVector::from_text("a b", Weighting::Raw);
        let b = TermVector::from_text("a c", Weighting::Raw);
        assert_relative_eq!(a.cosine(&b), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn sublinear_dampens_repetition() {
        // Under raw weighting, repeating "data" pulls similarity toward the
        // repeated term; sublinear keeps the profile flatter.
        let spam = TermVector::from_text("data data data data query", Weighting::Raw);
        let probe = TermVector::from_text("data", Weighting::Raw);
        let raw_sim = spam.cosine(&probe);

        let spam_s = TermVector::from_text("data data data data query", Weighting::Sublinear);
        let probe_s = TermVector::from_text("data", Weighting::Sublinear);
        let sub_sim = spam_s.cosine(&probe_s);

        assert!(
            sub_sim < raw_sim,
            "sublinear {sub_sim} should be below raw {raw_sim}"
        );
    }

    #[test]
    fn word_order_is_irrelevant() {
        let a = TermVector::from_text("where is the table", Weighting::Sublinear);
        let b = TermVector::from_text("the table is where", Weighting::Sublinear);
        assert_relative_eq!(a.cosine(&b), 1.0, epsilon = 1e-12);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cosine_is_symmetric_and_bounded(
                a in "[a-z ]{0,60}",
                b in "[a-z ]{0,60}",
            ) {
                for weighting in [Weighting::Raw, Weighting::Sublinear] {
                    let va = TermVector::from_text(&a, weighting);
                    let vb = TermVector::from_text(&b, weighting);
                    let ab = va.cosine(&vb);
                    let ba = vb.cosine(&va);
                    prop_assert!((ab - ba).abs() < 1e-12);
                    prop_assert!((0.0..=1.0).contains(&ab));
                }
            }

            #[test]
            fn self_similarity_is_one_for_nonzero(a in "[a-z]{1,12}( [a-z]{1,12}){0,8}") {
                let v = TermVector::from_text(&a, Weighting::Sublinear);
                prop_assume!(!v.is_zero());
                prop_assert!((v.cosine(&v) - 1.0).abs() < 1e-9);
            }
        }
    }
}
