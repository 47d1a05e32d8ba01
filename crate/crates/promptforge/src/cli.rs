//! Command-line front end. Five subcommands cover the workflows:
//! `augment` grows a training set, `classify` runs either classifier
//! over a query file, `optimize` runs the genetic example search,
//! `gridsearch` sweeps the evaluation grid, and `report` renders a
//! finished grid report. Every run that writes files also writes a
//! [`RunManifest`](crate::manifest::RunManifest) beside them recording
//! resolved settings, seeds, input digests, and backend call counts.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 on a runtime
//! failure. All randomness flows from the named `--seed` and
//! `--backend-seed` flags, so rerunning any subcommand with the same
//! arguments and the simulated backend reproduces its outputs byte for
//! byte.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::augment::{self, AugmentationSpec};
use crate::backend::{BackendConfig, CompletionBackend, CountingBackend};
use crate::data::{self, DatasetBundle, LabelSet, LabeledExample};
use crate::error::{Error, Result};
use crate::eval::{self, ExperimentReport, GridSpec};
use crate::ga::{self, GaConfig};
use crate::manifest::{self, BackendSummary, RunManifest};
use crate::prompt::{self, Candidate, PromptTemplate};
use crate::search::{self, SearchClassifierModel};

/// Parse `std::env::args` and run. Returns the process exit code.
pub fn run_from_env() -> i32 {
    let args: Vec<String> = std::env::args().collect();
    run(&args)
}

/// Run the CLI against an explicit argument vector (`args[0]` is the
/// program name). Returns the process exit code; all output goes to
/// the the process streams and the files named by flags.
pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(error) => {
            let code = match error.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = error.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(error) => {
            eprintln!("error: {error}");
            2
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "promptforge",
    version,
    about = "Few-shot text classification with self-augmented training data",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate labeled examples from a seed training set.
    Augment(AugmentArgs),
    /// Classify queries with a trained artifact.
    #[command(subcommand)]
    Classify(ClassifyCommand),
    /// Search for a high-fitness in-context example set.
    Optimize(OptimizeArgs),
    /// Sweep augmentation sizes and decoding settings over a dataset.
    Gridsearch(GridsearchArgs),
    /// Render a finished grid report to stdout.
    Report(ReportArgs),
}

/// Flags shared by every subcommand that talks to a completion backend.
#[derive(Debug, Args)]
struct BackendArgs {
    /// Completion backend: the deterministic offline simulator or a
    /// remote HTTP service.
    #[arg(long, default_value = "simulated", value_parser = ["simulated", "remote"])]
    backend: String,
    /// Engine name requested from a remote backend.
    #[arg(long, default_value = "ada")]
    engine: String,
    /// Remote completion endpoint; required with `--backend remote`.
    #[arg(long, required_if_eq("backend", "remote"))]
    endpoint_url: Option<String>,
    /// Environment variable holding the remote API key.
    #[arg(long, default_value = "PROMPTFORGE_API_KEY")]
    api_key_env: String,
    /// Remote request budget per second.
    #[arg(long, default_value_t = 10)]
    rate_limit: u32,
    /// Seed for the simulated backend's generator.
    #[arg(long, default_value_t = 0)]
    backend_seed: u64,
}

impl BackendArgs {
    fn build(&self) -> Result<Box<dyn CompletionBackend>> {
        self.config()?.build()
    }

    fn config(&self) -> Result<BackendConfig> {
        match self.backend.as_str() {
            "simulated" => Ok(BackendConfig::simulated(self.backend_seed)),
            "remote" => {
                let endpoint = self.endpoint_url.as_deref().ok_or_else(|| {
                    Error::InvalidConfig("remote backend requires --endpoint-url".into())
                })?;
                Ok(BackendConfig::remote(endpoint, self.engine.clone())
                    .with_api_key_env(self.api_key_env.clone())
                    .with_rate_limit(self.rate_limit))
            }
            other => Err(Error::InvalidConfig(format!("unknown backend `{other}`"))),
        }
    }

    fn summary(&self) -> BackendSummary {
        BackendSummary {
            kind: self.backend.clone(),
            engine: self.engine.clone(),
        }
    }

    fn record(&self, manifest: &mut RunManifest) {
        manifest.backend = Some(self.summary());
        manifest
            .setting("backend", &self.backend)
            .setting("engine", &self.engine)
            .setting("rate_limit", self.rate_limit)
            .setting("api_key_env", &self.api_key_env)
            .seed("backend", self.backend_seed);
        if let Some(url) = &self.endpoint_url {
            manifest.setting("endpoint_url", url);
        }
    }
}

#[derive(Debug, Args)]
struct AugmentArgs {
    /// Seed training set (JSON lines of {"text", "label"}).
    #[arg(long)]
    train: PathBuf,
    /// Number of examples to add.
    #[arg(long)]
    n: usize,
    /// Output path for the combined set (JSON lines).
    #[arg(long)]
    out: PathBuf,
    /// Seed for generation order and seed-example sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Debug, Subcommand)]
enum ClassifyCommand {
    /// Similarity-search classifier: rank stored examples against each
    /// query and vote. Needs no backend.
    Search(ClassifySearchArgs),
    /// Prompt classifier: few-shot prompt completion with the decode
    /// restricted to the label names.
    Prompt(ClassifyPromptArgs),
}

#[derive(Debug, Args)]
struct ClassifySearchArgs {
    /// Labeled examples forming the retrieval model (JSON lines).
    #[arg(long)]
    model: PathBuf,
    /// Neighbors consulted per query.
    #[arg(long)]
    max_examples: usize,
    /// Decision temperature; 0 picks the top label deterministically.
    #[arg(long)]
    temperature: f64,
    /// Queries to classify (JSON lines; labels are kept as the truth
    /// column).
    #[arg(long)]
    input: PathBuf,
    /// Output CSV of text, predicted label, and true label.
    #[arg(long)]
    out: PathBuf,
    /// Seed for temperature-weighted decisions.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ClassifyPromptArgs {
    /// In-context examples used in every prompt (JSON lines).
    #[arg(long)]
    candidate: PathBuf,
    /// Queries to classify (JSON lines; labels are kept as the truth
    /// column).
    #[arg(long)]
    input: PathBuf,
    /// Output CSV of text, predicted label, and true label.
    #[arg(long)]
    out: PathBuf,
    /// Decode temperature for the restricted completion.
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    /// Training set supplying initial alleles and generation seeds.
    #[arg(long)]
    train: PathBuf,
    /// Validation set scored by the fitness function.
    #[arg(long)]
    validation: PathBuf,
    /// Held-out set scored once with the best candidate at the end.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Trace output path (JSON lines, one record per generation).
    #[arg(long)]
    trace: PathBuf,
    /// Where to save the best candidate's examples (JSON lines).
    #[arg(long)]
    best_out: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    generations: usize,
    #[arg(long, default_value_t = 32)]
    population: usize,
    /// Examples per candidate.
    #[arg(long, default_value_t = 8)]
    alleles: usize,
    /// Candidates per tournament group.
    #[arg(long, default_value_t = 4)]
    tournament: usize,
    /// Per-allele replacement probability during mutation.
    #[arg(long, default_value_t = 0.1)]
    mutation_rate: f64,
    /// Decode temperature for fitness evaluations.
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    /// Whether fresh immigrants mutate like offspring.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    mutate_immigrants: bool,
    /// Stop early once best fitness reaches this value.
    #[arg(long)]
    fitness_target: Option<f64>,
    /// Stop early after this many backend calls.
    #[arg(long)]
    max_backend_calls: Option<u64>,
    /// Stop early after this many seconds of wall clock.
    #[arg(long)]
    time_limit_secs: Option<u64>,
    /// Seed for the whole optimization run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Debug, Args)]
struct GridsearchArgs {
    /// Directory holding train.jsonl, validation.jsonl, and test.jsonl.
    #[arg(long)]
    bundle: PathBuf,
    /// Grid settings file (`key = value` lines); defaults used when
    /// omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report.json and plot.csv.
    #[arg(long)]
    out: PathBuf,
    /// Seed for pool generation, sampling, and decoding.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory holding a gridsearch report.json.
    #[arg(long = "in")]
    in_dir: PathBuf,
    /// Output format printed to stdout.
    #[arg(long, default_value = "markdown", value_parser = ["csv", "markdown"])]
    format: String,
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Augment(args) => run_augment(args),
        Command::Classify(ClassifyCommand::Search(args)) => run_classify_search(args),
        Command::Classify(ClassifyCommand::Prompt(args)) => run_classify_prompt(args),
        Command::Optimize(args) => run_optimize(args),
        Command::Gridsearch(args) => run_gridsearch(args),
        Command::Report(args) => run_report(args),
    }
}

/// Directory a manifest should land in for an output file path.
fn output_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Stamp the outcome into the manifest and write it beside the
/// outputs. Manifest I/O failure is logged, never fatal.
fn finish_manifest(manifest: &mut RunManifest, dir: &Path, outcome: &Result<()>) {
    manifest.finish(outcome.as_ref().map(|_| ()));
    if let Err(error) = manifest::write_manifest(manifest, dir) {
        eprintln!("warning: failed to write run manifest: {error}");
    }
}

fn run_augment(args: AugmentArgs) -> Result<()> {
    let mut manifest = RunManifest::start("augment");
    args.backend.record(&mut manifest);
    manifest
        .setting("train", args.train.display())
        .setting("n", args.n)
        .setting("out", args.out.display())
        .seed("augment", args.seed);
    let outcome = augment_core(&args, &mut manifest);
    finish_manifest(&mut manifest, &output_dir(&args.out), &outcome);
    outcome
}

fn augment_core(args: &AugmentArgs, manifest: &mut RunManifest) -> Result<()> {
    manifest.input(&args.train)?;
    let label_set = LabelSet::data_other();
    let train = data::load_jsonl(&args.train, &label_set)?;
    let backend = args.backend.build()?;
    let counting = CountingBackend::new(backend);
    let spec = AugmentationSpec::new(args.n, args.seed);
    let augmented = augment::augment_training_set(&counting, &train, &spec)?;
    manifest.call_count = Some(counting.calls());
    if augmented.duplicate_warnings > 0 {
        eprintln!(
            "warning: {} duplicate generations accepted after redraws kept colliding",
            augmented.duplicate_warnings
        );
    }
    data::save_jsonl(&augmented.examples, &args.out)?;
    eprintln!(
        "augmented {} -> {} examples ({} duplicate warnings)",
        train.len(),
        augmented.examples.len(),
        augmented.duplicate_warnings
    );
    Ok(())
}

fn run_classify_search(args: ClassifySearchArgs) -> Result<()> {
    let mut manifest = RunManifest::start("classify search");
    manifest
        .setting("model", args.model.display())
        .setting("max_examples", args.max_examples)
        .setting("temperature", args.temperature)
        .setting("input", args.input.display())
        .setting("out", args.out.display())
        .seed("decode", args.seed);
    let outcome = classify_search_core(&args, &mut manifest);
    finish_manifest(&mut manifest, &output_dir(&args.out), &outcome);
    outcome
}

fn classify_search_core(args: &ClassifySearchArgs, manifest: &mut RunManifest) -> Result<()> {
    manifest.input(&args.model)?;
    manifest.input(&args.input)?;
    let label_set = LabelSet::data_other();
    let examples = data::load_jsonl(&args.model, &label_set)?;
    let queries = data::load_jsonl(&args.input, &label_set)?;
    let model = SearchClassifierModel::new(
        examples,
        args.max_examples,
        args.temperature,
        label_set.clone(),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let predictions: Vec<_> = queries
        .iter()
        .map(|query| search::classify(&model, query.text(), &mut rng))
        .collect();
    write_prediction_csv(&args.out, &queries, &predictions)?;
    report_accuracy(&queries, &predictions);
    Ok(())
}

fn run_classify_prompt(args: ClassifyPromptArgs) -> Result<()> {
    let mut manifest = RunManifest::start("classify prompt");
    args.backend.record(&mut manifest);
    manifest
        .setting("candidate", args.candidate.display())
        .setting("input", args.input.display())
        .setting("out", args.out.display())
        .setting("temperature", args.temperature);
    let outcome = classify_prompt_core(&args, &mut manifest);
    finish_manifest(&mut manifest, &output_dir(&args.out), &outcome);
    outcome
}

fn classify_prompt_core(args: &ClassifyPromptArgs, manifest: &mut RunManifest) -> Result<()> {
    manifest.input(&args.candidate)?;
    manifest.input(&args.input)?;
    let label_set = LabelSet::data_other();
    let alleles = data::load_jsonl(&args.candidate, &label_set)?;
    let queries = data::load_jsonl(&args.input, &label_set)?;
    let candidate = Candidate::new(alleles)?;
    let template = PromptTemplate::for_labels(&label_set);
    let backend = args.backend.build()?;
    let counting = CountingBackend::new(backend);
    let predictions = queries
        .iter()
        .map(|query| {
            prompt::classify(
                &counting,
                &template,
                &candidate,
                query.text(),
                &label_set,
                args.temperature,
            )
        })
        .collect::<Result<Vec<_>>>();
    manifest.call_count = Some(counting.calls());
    let predictions = predictions?;
    write_prediction_csv(&args.out, &queries, &predictions)?;
    report_accuracy(&queries, &predictions);
    Ok(())
}

fn write_prediction_csv(
    path: &Path,
    queries: &[LabeledExample],
    predictions: &[data::Label],
) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    let mut csv = csv::Writer::from_writer(file);
    csv.write_record(["text", "predicted_label", "true_label"])
        .map_err(|e| Error::Other(format!("writing predictions: {e}")))?;
    for (query, predicted) in queries.iter().zip(predictions) {
        csv.write_record([query.text(), predicted.name(), query.label().name()])
            .map_err(|e| Error::Other(format!("writing predictions: {e}")))?;
    }
    csv.flush()
        .map_err(|e| Error::io("flushing predictions", e))?;
    Ok(())
}

fn report_accuracy(queries: &[LabeledExample], predictions: &[data::Label]) {
    if queries.is_empty() {
        return;
    }
    let correct = queries
        .iter()
        .zip(predictions)
        .filter(|(query, predicted)| query.label() == *predicted)
        .count();
    println!(
        "accuracy {:.4} ({correct}/{})",
        correct as f64 / queries.len() as f64,
        queries.len()
    );
}

fn run_optimize(args: OptimizeArgs) -> Result<()> {
    let mut manifest = RunManifest::start("optimize");
    args.backend.record(&mut manifest);
    manifest
        .setting("train", args.train.display())
        .setting("validation", args.validation.display())
        .setting("trace", args.trace.display())
        .setting("generations", args.generations)
        .setting("population", args.population)
        .setting("alleles", args.alleles)
        .setting("tournament", args.tournament)
        .setting("mutation_rate", args.mutation_rate)
        .setting("temperature", args.temperature)
        .setting("mutate_immigrants", args.mutate_immigrants)
        .seed("ga", args.seed);
    if let Some(test) = &args.test {
        manifest.setting("test", test.display());
    }
    if let Some(path) = &args.best_out {
        manifest.setting("best_out", path.display());
    }
    if let Some(target) = args.fitness_target {
        manifest.setting("fitness_target", target);
    }
    if let Some(calls) = args.max_backend_calls {
        manifest.setting("max_backend_calls", calls);
    }
    if let Some(secs) = args.time_limit_secs {
        manifest.setting("time_limit_secs", secs);
    }
    let outcome = optimize_core(&args, &mut manifest);
    finish_manifest(&mut manifest, &output_dir(&args.trace), &outcome);
    outcome
}

fn optimize_core(args: &OptimizeArgs, manifest: &mut RunManifest) -> Result<()> {
    manifest.input(&args.train)?;
    manifest.input(&args.validation)?;
    let label_set = LabelSet::data_other();
    let train = data::load_jsonl(&args.train, &label_set)?;
    let validation = data::load_jsonl(&args.validation, &label_set)?;
    let test = match &args.test {
        Some(path) => {
            manifest.input(path)?;
            data::load_jsonl(path, &label_set)?
        }
        None => Vec::new(),
    };
    let bundle = DatasetBundle::new(train, validation, test, label_set.clone())?;
    let template = PromptTemplate::for_labels(&label_set);
    let config = GaConfig {
        population_size: args.population,
        n_alleles: args.alleles,
        tournament_size: args.tournament,
        mutation_rate: args.mutation_rate,
        generations: args.generations,
        seed: args.seed,
        temperature: args.temperature,
        mutate_immigrants: args.mutate_immigrants,
        fitness_target: args.fitness_target,
        max_backend_calls: args.max_backend_calls,
        time_limit: args.time_limit_secs.map(std::time::Duration::from_secs),
        ..GaConfig::default()
    };
    let backend = args.backend.build()?;
    let counting = CountingBackend::new(backend);

    let trace_file = std::fs::File::create(&args.trace)
        .map_err(|e| Error::io(format!("creating {}", args.trace.display()), e))?;
    let mut trace_writer = std::io::BufWriter::new(trace_file);
    let run = ga::run_traced(&counting, &bundle, &template, &config, |record| {
        let line = serde_json::to_string(record)
            .map_err(|e| Error::Other(format!("serializing trace record: {e}")))?;
        writeln!(trace_writer, "{line}")
            .and_then(|_| trace_writer.flush())
            .map_err(|e| Error::io(format!("writing {}", args.trace.display()), e))?;
        eprintln!(
            "generation {} best {:.4} mean {:.4} diversity {:.4}",
            record.generation, record.best_fitness, record.mean_fitness, record.diversity
        );
        Ok(())
    })?;
    manifest.call_count = Some(counting.calls());

    let best_fitness = run.best.fitness().unwrap_or(f64::NAN);
    println!("best validation fitness {best_fitness:.4}");
    if !bundle.test.is_empty() {
        let test_accuracy = prompt::accuracy(
            &counting,
            &template,
            &run.best,
            &bundle.test,
            &label_set,
            config.temperature,
        )?;
        manifest.call_count = Some(counting.calls());
        println!("test accuracy {test_accuracy:.4}");
    }
    if let Some(path) = &args.best_out {
        data::save_jsonl(run.best.alleles(), path)?;
    }
    Ok(())
}

fn run_gridsearch(args: GridsearchArgs) -> Result<()> {
    let mut manifest = RunManifest::start("gridsearch");
    args.backend.record(&mut manifest);
    manifest
        .setting("bundle", args.bundle.display())
        .setting("out", args.out.display())
        .seed("grid", args.seed);
    if let Some(config) = &args.config {
        manifest.setting("config", config.display());
    }
    let outcome = gridsearch_core(&args, &mut manifest);
    finish_manifest(&mut manifest, &args.out, &outcome);
    outcome
}

fn gridsearch_core(args: &GridsearchArgs, manifest: &mut RunManifest) -> Result<()> {
    let label_set = LabelSet::data_other();
    let mut splits = Vec::new();
    for name in ["train.jsonl", "validation.jsonl", "test.jsonl"] {
        let path = args.bundle.join(name);
        manifest.input(&path)?;
        splits.push(data::load_jsonl(&path, &label_set)?);
    }
    let test = splits.pop().expect("three splits");
    let validation = splits.pop().expect("two splits");
    let train = splits.pop().expect("one split");
    let bundle = DatasetBundle::new(train, validation, test, label_set)?;

    let grid = match &args.config {
        Some(path) => {
            manifest.input(path)?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            GridSpec::parse_key_value(&text)?
        }
        None => GridSpec::default(),
    };
    manifest
        .setting("temperatures", join(&grid.temperatures))
        .setting("max_examples_values", join(&grid.max_examples_values))
        .setting("n_added_values", join(&grid.n_added_values))
        .setting("repeats", grid.repeats);

    let backend = args.backend.build()?;
    let counting = CountingBackend::new(backend);
    let report = eval::run_grid(&counting, &bundle, &grid, args.seed);
    manifest.call_count = Some(counting.calls());
    let report = report?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| Error::io(format!("creating {}", args.out.display()), e))?;
    let report_path = args.out.join("report.json");
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Other(format!("serializing report: {e}")))?;
    std::fs::write(&report_path, format!("{json}\n"))
        .map_err(|e| Error::io(format!("writing {}", report_path.display()), e))?;
    eval::write_grid_plot(&report, &args.out.join("plot.csv"))?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    eprintln!(
        "grid complete: {} validation cells, best {:?}",
        report.cells.len(),
        report.best_validation_config
    );
    Ok(())
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn run_report(args: ReportArgs) -> Result<()> {
    let path = args.in_dir.join("report.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let report: ExperimentReport = serde_json::from_str(&text)
        .map_err(|e| Error::Other(format!("parsing {}: {e}", path.display())))?;
    let stdout = std::io::stdout();
    match args.format.as_str() {
        "csv" => eval::write_grid_plot_to(&report, stdout.lock())?,
        "markdown" => render_markdown(&report, &mut stdout.lock())
            .map_err(|e| Error::io("writing report", e))?,
        other => return Err(Error::InvalidConfig(format!("unknown format `{other}`"))),
    }
    Ok(())
}

fn render_markdown(report: &ExperimentReport, out: &mut impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "# Grid search report")?;
    writeln!(out)?;
    let best = &report.best_validation_config;
    writeln!(
        out,
        "Best validation cell: n_added={}, temperature={}, max_examples={}",
        best.n_added, best.temperature, best.max_examples
    )?;
    if let (Some(mean), Some(se)) = (report.test_results.mean, report.test_results.standard_error) {
        let p = report
            .test_results
            .p_value_vs_baseline
            .map(|p| format!(", p_vs_baseline={p:.4}"))
            .unwrap_or_default();
        writeln!(out, "Test accuracy at best cell: {mean:.4} +/- {se:.4}{p}")?;
    }
    writeln!(out)?;
    writeln!(out, "| n_added | split | mean | se |")?;
    writeln!(out, "|--------:|-------|-----:|---:|")?;
    for row in &report.plot_series {
        writeln!(
            out,
            "| {} | {} | {:.4} | {:.4} |",
            row.n_added, row.split, row.mean, row.se
        )?;
    }
    if !report.warnings.is_empty() {
        writeln!(out)?;
        writeln!(out, "Warnings:")?;
        for warning in &report.warnings {
            writeln!(out, "- {warning}")?;
        }
    }
    Ok(())
}
