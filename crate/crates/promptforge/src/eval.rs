//! Experiment harness: a hyperparameter grid over the similarity-search
//! classifier with augmented training sets, repeated trials, t-tests
//! against the unaugmented baseline, and plot-ready CSV emission.
//!
//! Augmentation cost is paid once: a pool 10% larger than the largest
//! requested addition is generated up front and each repeat samples its
//! additions from that pool without replacement. For every addition
//! count, every (temperature, example-budget) cell is scored on the
//! validation split; the per-count best cell is then re-scored on the
//! test split with fresh repeats, which is what the plot series reports.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_training_set, AugmentationSpec};
use crate::backend::CompletionBackend;
use crate::data::{DatasetBundle, LabelSet, LabeledExample};
use crate::error::{Error, Result};
use crate::ga::GaTrace;
use crate::search::{rank_neighbors, SearchClassifierModel};
use crate::stats::{summarize, two_sample_t_test};

/// Generated pool size relative to the largest requested addition count.
const POOL_OVERSAMPLE: f64 = 1.1;
/// Addition counts strictly above this get an extra example-budget value.
const LARGE_N_THRESHOLD: usize = 100;
/// The extra example budget used for large addition counts.
const LARGE_MAX_EXAMPLES: usize = 100;

/// The hyperparameter grid. `max_examples` is the neighbor budget of the
/// search classifier; addition counts above [`LARGE_N_THRESHOLD`] extend
/// the budget list with [`LARGE_MAX_EXAMPLES`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub temperatures: Vec<f64>,
    pub max_examples_values: Vec<usize>,
    pub n_added_values: Vec<usize>,
    pub repeats: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            temperatures: vec![0.0, 0.1, 0.5],
            max_examples_values: vec![5, 10, 15, 20, 25],
            n_added_values: vec![0, 10, 100, 1000, 10_000],
            repeats: 5,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.temperatures.is_empty()
            || self.max_examples_values.is_empty()
            || self.n_added_values.is_empty()
        {
            return Err(Error::InvalidConfig(
                "grid lists must all be non-empty".into(),
            ));
        }
        if self.repeats < 2 {
            return Err(Error::InvalidConfig(format!(
                "repeats must be at least 2 for standard errors, got {}",
                self.repeats
            )));
        }
        for &t in &self.temperatures {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "temperatures must be finite and non-negative, got {t}"
                )));
            }
        }
        if self.max_examples_values.iter().any(|&m| m == 0) {
            return Err(Error::InvalidConfig(
                "max_examples values must be positive".into(),
            ));
        }
        for (name, has_duplicates) in [
            ("temperatures", has_dup_f64(&self.temperatures)),
            ("max_examples_values", has_dup(&self.max_examples_values)),
            ("n_added_values", has_dup(&self.n_added_values)),
        ] {
            if has_duplicates {
                return Err(Error::InvalidConfig(format!(
                    "{name} contains duplicate entries"
                )));
            }
        }
        Ok(())
    }

    /// The example-budget list effective at one addition count.
    pub fn max_examples_for(&self, n_added: usize) -> Vec<usize> {
        let mut values = self.max_examples_values.clone();
        if n_added > LARGE_N_THRESHOLD && !values.contains(&LARGE_MAX_EXAMPLES) {
            values.push(LARGE_MAX_EXAMPLES);
        }
        values
    }

    /// Parse a plain-text key-value document: one `key = value` per
    /// line, `#` comments, comma-separated numbers for list values.
    /// Omitted keys keep their defaults; unknown or repeated keys are
    /// rejected.
    pub fn parse_key_value(text: &str) -> Result<Self> {
        let mut spec = GridSpec::default();
        let mut seen = std::collections::BTreeSet::new();
        for (index, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::GridConfig {
                key: format!("line {}", index + 1),
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::GridConfig {
                    key: key.to_string(),
                    message: "key appears more than once".into(),
                });
            }
            match key {
                "temperatures" => spec.temperatures = parse_list(key, value)?,
                "max_examples_values" => spec.max_examples_values = parse_list(key, value)?,
                "n_added_values" => spec.n_added_values = parse_list(key, value)?,
                "repeats" => {
                    spec.repeats = value.parse().map_err(|_| Error::GridConfig {
                        key: key.to_string(),
                        message: format!("cannot parse `{value}` as an integer"),
                    })?
                }
                other => {
                    return Err(Error::GridConfig {
                        key: other.to_string(),
                        message: "unknown key".into(),
                    })
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|item| {
            item.trim().parse().map_err(|_| Error::GridConfig {
                key: key.to_string(),
                message: format!("cannot parse `{}` in list", item.trim()),
            })
        })
        .collect()
}

fn has_dup(values: &[usize]) -> bool {
    let set: std::collections::BTreeSet<usize> = values.iter().copied().collect();
    set.len() != values.len()
}

fn has_dup_f64(values: &[f64]) -> bool {
    let set: std::collections::BTreeSet<u64> = values.iter().map(|v| v.to_bits()).collect();
    set.len() != values.len()
}

/// One point of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    pub n_added: usize,
    pub temperature: f64,
    pub max_examples: usize,
}

/// Accuracies of one cell across its completed repeats. A cell with
/// fewer than two completed repeats is invalid: its mean and standard
/// error stay `None` rather than averaging what little exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub config: CellConfig,
    pub accuracies: Vec<f64>,
    pub mean: Option<f64>,
    pub standard_error: Option<f64>,
    pub p_value_vs_baseline: Option<f64>,
}

impl CellResult {
    fn from_accuracies(config: CellConfig, accuracies: Vec<f64>) -> Self {
        let (mean, standard_error) = match summarize(&accuracies) {
            Ok((m, se)) => (Some(m), Some(se)),
            Err(_) => (None, None),
        };
        CellResult {
            config,
            accuracies,
            mean,
            standard_error,
            p_value_vs_baseline: None,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.accuracies.len() >= 2
    }
}

/// Which split a plot row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Validation => write!(f, "validation"),
            Split::Test => write!(f, "test"),
        }
    }
}

/// One row of the accuracy-versus-additions plot data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub n_added: usize,
    pub split: Split,
    pub mean: f64,
    pub se: f64,
}

/// Everything a grid run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub grid: GridSpec,
    pub seed: u64,
    /// Every validation cell, in (n_added, temperature, max_examples)
    /// iteration order.
    pub cells: Vec<CellResult>,
    /// One test-split result per addition count: its best validation
    /// cell re-evaluated on the test split.
    pub test_cells: Vec<CellResult>,
    pub best_validation_config: CellConfig,
    /// The test cell belonging to `best_validation_config`.
    pub test_results: CellResult,
    pub plot_series: Vec<PlotRow>,
    pub warnings: Vec<String>,
}

/// splitmix64-style mixer used to derive independent sub-seeds; chained
/// calls give each (split, addition count, repeat, cell) its own stream.
pub(crate) fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SALT_POOL: u64 = 1;
const SALT_VALIDATION: u64 = 2;
const SALT_TEST: u64 = 3;
const SALT_SAMPLE: u64 = 4;
const SALT_EVAL: u64 = 5;

/// Scores one augmented training set against a query split for a batch
/// of (temperature, max_examples) cells. The indirection exists so
/// tests can swap in constant or failing classifiers; production code
/// uses [`SearchRepeatEvaluator`].
pub(crate) trait RepeatEvaluator {
    fn evaluate(
        &mut self,
        augmented_train: &[LabeledExample],
        queries: &[LabeledExample],
        label_set: &LabelSet,
        cells: &[(f64, usize)],
        seed: u64,
    ) -> Result<Vec<f64>>;
}

/// The real evaluator: one model build and one neighbor ranking per
/// repeat, shared by every cell. A cell's result is identical to
/// classifying with a model built at that cell's own settings, because
/// the top `max_examples` neighbors are a prefix of the deepest ranking.
pub(crate) struct SearchRepeatEvaluator;

impl RepeatEvaluator for SearchRepeatEvaluator {
    fn evaluate(
        &mut self,
        augmented_train: &[LabeledExample],
        queries: &[LabeledExample],
        label_set: &LabelSet,
        cells: &[(f64, usize)],
        seed: u64,
    ) -> Result<Vec<f64>> {
        let max_depth = cells
            .iter()
            .map(|&(_, m)| m)
            .max()
            .expect("cell batch is never empty");
        let model = SearchClassifierModel::new(
            augmented_train.to_vec(),
            max_depth,
            0.0,
            label_set.clone(),
        )?;
        let rankings: Vec<_> = queries
            .iter()
            .map(|q| rank_neighbors(&model, q.text()))
            .collect();

        let mut out = Vec::with_capacity(cells.len());
        for (cell_index, &(temperature, max_examples)) in cells.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, cell_index as u64));
            let mut correct = 0usize;
            for (query, ranking) in queries.iter().zip(&rankings) {
                let top = &ranking[..max_examples.min(ranking.len())];
                let label = crate::search::decide(label_set, temperature, top, &mut rng);
                if label == *query.label() {
                    correct += 1;
                }
            }
            out.push(correct as f64 / queries.len() as f64);
        }
        Ok(out)
    }
}

/// Generate the augmentation pool: 10% more than the largest requested
/// addition count, rounded up to class balance. Empty when nothing is
/// ever added.
fn build_augmentation_pool(
    backend: &dyn CompletionBackend,
    bundle: &DatasetBundle,
    grid: &GridSpec,
    seed: u64,
    warnings: &mut Vec<String>,
) -> Result<Vec<LabeledExample>> {
    let max_n = *grid
        .n_added_values
        .iter()
        .max()
        .expect("validated grid has addition counts");
    if max_n == 0 {
        return Ok(Vec::new());
    }
    let labels = bundle.label_set.len();
    let target = ((max_n as f64 * POOL_OVERSAMPLE).ceil() as usize).div_ceil(labels) * labels;
    let spec = AugmentationSpec::new(target, mix_seed(seed, SALT_POOL));
    let augmented = augment_training_set(backend, &bundle.train, &spec)?;
    if augmented.duplicate_warnings > 0 {
        warnings.push(format!(
            "augmentation pool of {target} contains {} duplicate texts (generation variety exhausted)",
            augmented.duplicate_warnings
        ));
    }
    Ok(augmented.examples[bundle.train.len()..].to_vec())
}

/// Draw `n` pool examples without replacement; class-balanced when `n`
/// divides evenly across the labels, otherwise a plain uniform draw.
fn sample_additions(
    pool: &[LabeledExample],
    n: usize,
    label_set: &LabelSet,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<LabeledExample>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if n > pool.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot sample {n} additions from a pool of {}",
            pool.len()
        )));
    }
    let mut additions = Vec::with_capacity(n);
    if n % label_set.len() == 0 {
        let per_label = n / label_set.len();
        for label in label_set.iter() {
            let indices: Vec<usize> = pool
                .iter()
                .enumerate()
                .filter(|(_, e)| e.label() == label)
                .map(|(i, _)| i)
                .collect();
            if indices.len() < per_label {
                return Err(Error::InsufficientExamples {
                    label: label.name().to_string(),
                    needed: per_label,
                    available: indices.len(),
                });
            }
            for pick in rand::seq::index::sample(rng, indices.len(), per_label) {
                additions.push(pool[indices[pick]].clone());
            }
        }
    } else {
        for pick in rand::seq::index::sample(rng, pool.len(), n) {
            additions.push(pool[pick].clone());
        }
    }
    Ok(additions)
}

/// Run the whole grid against a backend. See the module docs for the
/// protocol; `seed` controls pool generation, sampling, and sampling-
/// temperature decoding, making reruns bit-identical.
pub fn run_grid(
    backend: &dyn CompletionBackend,
    bundle: &DatasetBundle,
    grid: &GridSpec,
    seed: u64,
) -> Result<ExperimentReport> {
    grid.validate()?;
    let mut warnings = Vec::new();
    let pool = build_augmentation_pool(backend, bundle, grid, seed, &mut warnings)?;
    run_grid_inner(
        bundle,
        grid,
        seed,
        &pool,
        &mut SearchRepeatEvaluator,
        warnings,
    )
}

pub(crate) fn run_grid_inner(
    bundle: &DatasetBundle,
    grid: &GridSpec,
    seed: u64,
    pool: &[LabeledExample],
    evaluator: &mut dyn RepeatEvaluator,
    mut warnings: Vec<String>,
) -> Result<ExperimentReport> {
    grid.validate()?;
    for &n in &grid.n_added_values {
        if n > pool.len() {
            return Err(Error::InvalidConfig(format!(
                "addition count {n} exceeds the pool of {}",
                pool.len()
            )));
        }
    }

    let mut cells: Vec<CellResult> = Vec::new();
    let mut test_cells: Vec<CellResult> = Vec::new();

    for (n_index, &n_added) in grid.n_added_values.iter().enumerate() {
        let budgets = grid.max_examples_for(n_added);
        let cell_settings: Vec<(f64, usize)> = grid
            .temperatures
            .iter()
            .flat_map(|&t| budgets.iter().map(move |&m| (t, m)))
            .collect();

        // Validation repeats: sample additions, score every cell.
        let mut accuracies: Vec<Vec<f64>> = vec![Vec::new(); cell_settings.len()];
        for repeat in 0..grid.repeats {
            match run_repeat(
                bundle,
                pool,
                n_added,
                &cell_settings,
                &bundle.validation,
                evaluator,
                seed,
                SALT_VALIDATION,
                n_index,
                repeat,
            ) {
                Ok(values) => {
                    for (cell, value) in accuracies.iter_mut().zip(values) {
                        cell.push(value);
                    }
                }
                Err(error) => warnings.push(format!(
                    "validation repeat {repeat} for {n_added} additions failed: {error}"
                )),
            }
        }
        let mut n_cells: Vec<CellResult> = cell_settings
            .iter()
            .zip(accuracies)
            .map(|(&(temperature, max_examples), values)| {
                CellResult::from_accuracies(
                    CellConfig {
                        n_added,
                        temperature,
                        max_examples,
                    },
                    values,
                )
            })
            .collect();
        for cell in &n_cells {
            if !cell.is_valid() {
                warnings.push(format!(
                    "cell (n_added={}, temperature={}, max_examples={}) completed {} of {} repeats and is invalid",
                    cell.config.n_added,
                    cell.config.temperature,
                    cell.config.max_examples,
                    cell.accuracies.len(),
                    grid.repeats
                ));
            }
        }

        // This count's best cell, re-scored on the test split.
        if let Some(best) = best_cell(&n_cells) {
            let best_config = best.config;
            let mut test_accuracies = Vec::new();
            for repeat in 0..grid.repeats {
                match run_repeat(
                    bundle,
                    pool,
                    n_added,
                    &[(best_config.temperature, best_config.max_examples)],
                    &bundle.test,
                    evaluator,
                    seed,
                    SALT_TEST,
                    n_index,
                    repeat,
                ) {
                    Ok(values) => test_accuracies.push(values[0]),
                    Err(error) => warnings.push(format!(
                        "test repeat {repeat} for {n_added} additions failed: {error}"
                    )),
                }
            }
            test_cells.push(CellResult::from_accuracies(best_config, test_accuracies));
        } else {
            warnings.push(format!(
                "no valid validation cell for {n_added} additions; skipping its test evaluation"
            ));
        }
        cells.append(&mut n_cells);
    }

    attach_baseline_p_values(&mut cells);
    attach_baseline_p_values(&mut test_cells);

    let best_validation_config = best_cell(&cells)
        .map(|c| c.config)
        .ok_or_else(|| Error::InvalidConfig("no grid cell completed enough repeats".into()))?;
    let test_results = test_cells
        .iter()
        .find(|c| c.config.n_added == best_validation_config.n_added)
        .cloned()
        .ok_or_else(|| {
            Error::InvalidConfig("best configuration has no test evaluation".into())
        })?;

    let mut plot_series = Vec::new();
    for &n_added in &grid.n_added_values {
        let validation_best = cells
            .iter()
            .filter(|c| c.config.n_added == n_added)
            .filter(|c| c.is_valid())
            .max_by(|a, b| compare_cells(a, b));
        if let Some(cell) = validation_best {
            plot_series.push(PlotRow {
                n_added,
                split: Split::Validation,
                mean: cell.mean.expect("valid cell has a mean"),
                se: cell.standard_error.expect("valid cell has a standard error"),
            });
        }
        if let Some(cell) = test_cells
            .iter()
            .find(|c| c.config.n_added == n_added)
            .filter(|c| c.is_valid())
        {
            plot_series.push(PlotRow {
                n_added,
                split: Split::Test,
                mean: cell.mean.expect("valid cell has a mean"),
                se: cell.standard_error.expect("valid cell has a standard error"),
            });
        }
    }

    Ok(ExperimentReport {
        grid: grid.clone(),
        seed,
        cells,
        test_cells,
        best_validation_config,
        test_results,
        plot_series,
        warnings,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_repeat(
    bundle: &DatasetBundle,
    pool: &[LabeledExample],
    n_added: usize,
    cell_settings: &[(f64, usize)],
    queries: &[LabeledExample],
    evaluator: &mut dyn RepeatEvaluator,
    seed: u64,
    split_salt: u64,
    n_index: usize,
    repeat: usize,
) -> Result<Vec<f64>> {
    let repeat_seed = mix_seed(
        mix_seed(mix_seed(seed, split_salt), n_index as u64),
        repeat as u64,
    );
    let mut sample_rng = ChaCha8Rng::seed_from_u64(mix_seed(repeat_seed, SALT_SAMPLE));
    let additions = sample_additions(pool, n_added, &bundle.label_set, &mut sample_rng)?;
    let mut augmented = bundle.train.clone();
    augmented.extend(additions);
    evaluator.evaluate(
        &augmented,
        queries,
        &bundle.label_set,
        cell_settings,
        mix_seed(repeat_seed, SALT_EVAL),
    )
}

/// Ordering for best-cell selection: higher mean wins; ties prefer
/// fewer additions, then lower temperature, then a smaller example
/// budget (the cheaper configuration).
fn compare_cells(a: &CellResult, b: &CellResult) -> std::cmp::Ordering {
    let mean_a = a.mean.expect("compared cells are valid");
    let mean_b = b.mean.expect("compared cells are valid");
    mean_a
        .partial_cmp(&mean_b)
        .expect("accuracies are never NaN")
        .then_with(|| b.config.n_added.cmp(&a.config.n_added))
        .then_with(|| {
            b.config
                .temperature
                .partial_cmp(&a.config.temperature)
                .expect("temperatures are finite")
        })
        .then_with(|| b.config.max_examples.cmp(&a.config.max_examples))
}

fn best_cell(cells: &[CellResult]) -> Option<&CellResult> {
    cells
        .iter()
        .filter(|c| c.is_valid())
        .max_by(|a, b| compare_cells(a, b))
}

/// Fill `p_value_vs_baseline` on every valid non-baseline cell that has
/// a valid zero-additions counterpart. Validation cells pair with the
/// baseline cell at the same temperature and example budget; test cells
/// (one per addition count) pair with the baseline's test cell.
fn attach_baseline_p_values(cells: &mut [CellResult]) {
    let baselines: BTreeMap<(u64, usize), Vec<f64>> = cells
        .iter()
        .filter(|c| c.config.n_added == 0 && c.is_valid())
        .map(|c| {
            (
                (c.config.temperature.to_bits(), c.config.max_examples),
                c.accuracies.clone(),
            )
        })
        .collect();
    let unique_baseline: Option<Vec<f64>> = if baselines.len() == 1 {
        baselines.values().next().cloned()
    } else {
        None
    };
    for cell in cells.iter_mut() {
        if cell.config.n_added == 0 || !cell.is_valid() {
            continue;
        }
        let key = (cell.config.temperature.to_bits(), cell.config.max_examples);
        // Exact-config match first; a lone baseline (the test series
        // case, where each count carries its own best config) applies
        // to every count.
        let baseline = baselines.get(&key).or(unique_baseline.as_ref());
        if let Some(baseline) = baseline {
            if let Ok(test) = two_sample_t_test(&cell.accuracies, baseline) {
                cell.p_value_vs_baseline = Some(test.p);
            }
        }
    }
}

/// Write the accuracy-versus-additions series of a grid report as CSV.
pub fn write_grid_plot(report: &ExperimentReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    write_grid_plot_to(report, file)
}

pub fn write_grid_plot_to(report: &ExperimentReport, writer: impl Write) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["n_added", "split", "mean", "se"])
        .map_err(|e| Error::Other(format!("writing plot csv: {e}")))?;
    for row in &report.plot_series {
        csv.write_record([
            row.n_added.to_string(),
            row.split.to_string(),
            format!("{}", row.mean),
            format!("{}", row.se),
        ])
        .map_err(|e| Error::Other(format!("writing plot csv: {e}")))?;
    }
    csv.flush()
        .map_err(|e| Error::io("flushing plot csv", e))?;
    Ok(())
}

/// Write optimization traces as CSV: one series per trial plus, when
/// at least two trials cover a generation, a cross-trial `avg` series
/// carrying standard errors.
pub fn write_trace_plot(traces: &[GaTrace], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    write_trace_plot_to(traces, file)
}

pub fn write_trace_plot_to(traces: &[GaTrace], writer: impl Write) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record([
        "generation",
        "trial",
        "best_fitness",
        "mean_fitness",
        "diversity",
        "best_fitness_se",
        "mean_fitness_se",
        "diversity_se",
    ])
    .map_err(|e| Error::Other(format!("writing trace csv: {e}")))?;

    for (trial, trace) in traces.iter().enumerate() {
        for record in &trace.records {
            csv.write_record([
                record.generation.to_string(),
                trial.to_string(),
                format!("{}", record.best_fitness),
                format!("{}", record.mean_fitness),
                format!("{}", record.diversity),
                String::new(),
                String::new(),
                String::new(),
            ])
            .map_err(|e| Error::Other(format!("writing trace csv: {e}")))?;
        }
    }

    let longest = traces.iter().map(|t| t.records.len()).max().unwrap_or(0);
    for generation in 0..longest {
        let at_generation: Vec<&crate::ga::TraceRecord> = traces
            .iter()
            .filter_map(|t| t.records.get(generation))
            .collect();
        // Average only generations every trial reached, so early-stopped
        // runs cannot skew the tail of the averaged series.
        if at_generation.len() != traces.len() || at_generation.len() < 2 {
            continue;
        }
        let collect = |f: fn(&crate::ga::TraceRecord) -> f64| -> Vec<f64> {
            at_generation.iter().map(|r| f(r)).collect()
        };
        let best = summarize(&collect(|r| r.best_fitness)).expect("two or more trials");
        let mean = summarize(&collect(|r| r.mean_fitness)).expect("two or more trials");
        let diversity = summarize(&collect(|r| r.diversity)).expect("two or more trials");
        csv.write_record([
            generation.to_string(),
            "avg".to_string(),
            format!("{}", best.0),
            format!("{}", mean.0),
            format!("{}", diversity.0),
            format!("{}", best.1),
            format!("{}", mean.1),
            format!("{}", diversity.1),
        ])
        .map_err(|e| Error::Other(format!("writing trace csv: {e}")))?;
    }
    csv.flush()
        .map_err(|e| Error::io("flushing trace csv", e))?;
    Ok(())
}

/// Endpoint metrics of one optimization trial, for comparison against a
/// grid report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaEndpoint {
    pub best_validation_accuracy: f64,
    pub test_accuracy: f64,
    /// Population diversity at the final generation.
    pub final_diversity: f64,
}

/// One comparison row: the optimizer side as mean (± SE when two or
/// more trials exist) next to the grid side where it has a counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub ga_mean: f64,
    pub ga_standard_error: Option<f64>,
    pub grid_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

/// Put optimizer trials and a grid report side by side: best validation
/// accuracy, test accuracy, and final-population diversity (the grid has
/// no diversity notion, so that side stays empty).
pub fn compare_endpoints(
    ga_results: &[GaEndpoint],
    report: &ExperimentReport,
) -> Result<ComparisonTable> {
    if ga_results.is_empty() {
        return Err(Error::InvalidConfig(
            "endpoint comparison needs at least one optimization trial".into(),
        ));
    }
    let side = |values: Vec<f64>| -> (f64, Option<f64>) {
        match summarize(&values) {
            Ok((mean, se)) => (mean, Some(se)),
            // A single trial has a mean but no spread.
            Err(_) => (values[0], None),
        }
    };
    let (val_mean, val_se) = side(
        ga_results
            .iter()
            .map(|r| r.best_validation_accuracy)
            .collect(),
    );
    let (test_mean, test_se) = side(ga_results.iter().map(|r| r.test_accuracy).collect());
    let (div_mean, div_se) = side(ga_results.iter().map(|r| r.final_diversity).collect());

    let grid_best_validation = report
        .cells
        .iter()
        .find(|c| c.config == report.best_validation_config)
        .and_then(|c| c.mean);

    Ok(ComparisonTable {
        rows: vec![
            ComparisonRow {
                metric: "best_validation_accuracy".into(),
                ga_mean: val_mean,
                ga_standard_error: val_se,
                grid_value: grid_best_validation,
            },
            ComparisonRow {
                metric: "test_accuracy".into(),
                ga_mean: test_mean,
                ga_standard_error: test_se,
                grid_value: report.test_results.mean,
            },
            ComparisonRow {
                metric: "final_population_diversity".into(),
                ga_mean: div_mean,
                ga_standard_error: div_se,
                grid_value: None,
            },
        ],
    })
}
