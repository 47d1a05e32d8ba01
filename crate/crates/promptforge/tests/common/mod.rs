//! Shared helpers for the integration suites: fixture loading, a
//! synthetic linearly separable question set, a keyword-count oracle
//! classifier for it, and an independent t-distribution tail
//! integrator used to cross-check the statistics module.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use promptforge::data::{DatasetBundle, Label, LabelSet, LabeledExample};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

/// The hand-written question corpus: 26 train, 26 validation, 20 test,
/// class-balanced and text-disjoint.
pub fn fixture_bundle() -> DatasetBundle {
    let label_set = LabelSet::data_other();
    let load = |name: &str| promptforge::data::load_jsonl(fixture_path(name), &label_set).unwrap();
    DatasetBundle::new(
        load("train.jsonl"),
        load("validation.jsonl"),
        load("test.jsonl"),
        label_set,
    )
    .unwrap()
}

/// Thirty words only ever used by `Data` questions.
pub const DATA_VOCABULARY: [&str; 30] = [
    "orders",
    "revenue",
    "invoices",
    "shipments",
    "inventory",
    "refunds",
    "quarterly",
    "monthly",
    "totals",
    "average",
    "median",
    "count",
    "percent",
    "growth",
    "sales",
    "customers",
    "accounts",
    "subscriptions",
    "renewals",
    "churn",
    "tickets",
    "backlog",
    "warehouse",
    "regions",
    "forecast",
    "margin",
    "pipeline",
    "conversions",
    "sessions",
    "signups",
];

/// Thirty words only ever used by `Other` questions; disjoint from
/// [`DATA_VOCABULARY`].
pub const OTHER_VOCABULARY: [&str; 30] = [
    "puppy",
    "weather",
    "guitar",
    "recipe",
    "movie",
    "holiday",
    "jokes",
    "garden",
    "painting",
    "football",
    "sunset",
    "coffee",
    "neighbors",
    "camping",
    "birthday",
    "museum",
    "bicycle",
    "novels",
    "cooking",
    "beach",
    "hiking",
    "piano",
    "wedding",
    "fishing",
    "sweater",
    "karaoke",
    "puzzles",
    "picnic",
    "kittens",
    "daydream",
];

fn synthetic_text(vocabulary: &[&str], rng: &mut ChaCha8Rng, used: &mut BTreeSet<String>) -> String {
    loop {
        let length = rng.gen_range(5..=9);
        let words: Vec<&str> = (0..length)
            .map(|_| vocabulary[rng.gen_range(0..vocabulary.len())])
            .collect();
        let text = format!("{}?", words.join(" "));
        if used.insert(text.clone()) {
            return text;
        }
    }
}

/// A linearly separable dataset: every `Data` text draws only from
/// [`DATA_VOCABULARY`], every `Other` text only from
/// [`OTHER_VOCABULARY`]. Splits are 26/26/20, class-balanced, with all
/// 72 texts distinct; the same seed always builds the same bundle.
pub fn separable_bundle(seed: u64) -> DatasetBundle {
    let label_set = LabelSet::data_other();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = BTreeSet::new();
    let mut per_class: Vec<Vec<LabeledExample>> = Vec::new();
    for (vocabulary, label) in [
        (&DATA_VOCABULARY[..], "Data"),
        (&OTHER_VOCABULARY[..], "Other"),
    ] {
        let label = Label::new(label).unwrap();
        let texts: Vec<LabeledExample> = (0..36)
            .map(|_| {
                let text = synthetic_text(vocabulary, &mut rng, &mut used);
                LabeledExample::seed(text, label.clone()).unwrap()
            })
            .collect();
        per_class.push(texts);
    }
    let slice = |range: std::ops::Range<usize>| -> Vec<LabeledExample> {
        per_class
            .iter()
            .flat_map(|class| class[range.clone()].iter().cloned())
            .collect()
    };
    DatasetBundle::new(slice(0..13), slice(13..26), slice(26..36), label_set).unwrap()
}

/// Count which class vocabulary a text's words come from and answer
/// with that class. On the separable dataset this is a perfect
/// classifier by construction.
pub fn keyword_oracle(text: &str) -> Label {
    let data: BTreeSet<&str> = DATA_VOCABULARY.iter().copied().collect();
    let other: BTreeSet<&str> = OTHER_VOCABULARY.iter().copied().collect();
    let mut data_hits = 0usize;
    let mut other_hits = 0usize;
    for word in text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
    {
        let word = word.to_lowercase();
        if data.contains(word.as_str()) {
            data_hits += 1;
        }
        if other.contains(word.as_str()) {
            other_hits += 1;
        }
    }
    if data_hits >= other_hits {
        Label::new("Data").unwrap()
    } else {
        Label::new("Other").unwrap()
    }
}

/// Five points with an exact sample mean and standard error: spacing
/// `d = se * sqrt(2)` gives deviations {-2d,-d,0,d,2d}, whose sample
/// variance is 2.5 d^2 and whose standard error is therefore `se`.
pub fn five_points(mean: f64, standard_error: f64) -> Vec<f64> {
    let d = standard_error * 2.0_f64.sqrt();
    vec![
        mean - 2.0 * d,
        mean - d,
        mean,
        mean + d,
        mean + 2.0 * d,
    ]
}

fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_variance(values: &[f64]) -> f64 {
    let m = mean_of(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

/// Welch statistic, degrees of freedom, and two-sided p-value computed
/// from scratch: the p-value integrates the t-density kernel
/// numerically instead of using an incomplete-beta implementation.
pub fn welch_reference(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_variance(a), sample_variance(b));
    let sa = va / na;
    let sb = vb / nb;
    let t = (mean_of(a) - mean_of(b)) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    (t, df, two_sided_p(t, df))
}

/// Two-sided tail probability of Student's t by adaptive Simpson
/// integration of the unnormalized density kernel. Normalizing by the
/// numerically integrated whole axis sidesteps the gamma constant.
/// The long heavy tail is integrated in geometric segments so the
/// adaptive recursion localizes instead of splitting the whole span.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    let kernel = |x: f64| (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
    let bound = 5000.0;
    let integrate = |from: f64| -> f64 {
        let mut total = 0.0;
        let mut lo = from;
        let mut hi = (from.max(1.0)) * 4.0;
        loop {
            let segment_end = hi.min(bound);
            if segment_end > lo {
                total += adaptive_simpson(&kernel, lo, segment_end, 1e-12, 40);
            }
            if segment_end >= bound {
                return total;
            }
            lo = segment_end;
            hi *= 4.0;
        }
    };
    let whole = integrate(0.0);
    let tail = integrate(t.abs().min(bound));
    (tail / whole).clamp(0.0, 1.0)
}

fn simpson_slice(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson_slice(f, a, m);
        let right = simpson_slice(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, m, left, eps / 2.0, depth - 1)
            + recurse(f, m, b, right, eps / 2.0, depth - 1)
    }
    recurse(f, a, b, simpson_slice(f, a, b), eps, depth)
}
