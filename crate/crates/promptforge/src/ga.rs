//! Genetic search over in-context example sets.
//!
//! A candidate's genome is its ordered allele list (see
//! [`crate::prompt::Candidate`]); fitness is validation accuracy of the
//! prompt the candidate renders. Each generation: elitist tournament
//! selection keeps the best quarter, backend-generated immigrants bring in
//! fresh alleles, every winner crosses with an immigrant to produce two
//! offspring, and offspring plus immigrants mutate against the cumulative
//! gene pool. Winners pass through untouched, which is what makes best
//! fitness non-decreasing.

use std::collections::BTreeMap;
use std::time::Duration;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::generate_example;
use crate::backend::{CompletionBackend, CountingBackend};
use crate::data::{DatasetBundle, LabeledExample, LabelSet};
use crate::error::{Error, Result};
use crate::prompt::{self, Candidate, PromptTemplate};

/// How many fresh generation calls one immigrant allele slot may burn
/// while avoiding duplicate texts within its candidate.
const IMMIGRANT_ALLELE_ATTEMPTS: u32 = 20;

/// What a candidate's fitness measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessMetric {
    /// Fraction of the validation set classified correctly.
    Accuracy,
}

/// All knobs of one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub n_alleles: usize,
    pub tournament_size: usize,
    pub crossover_probability: f64,
    /// Per-allele replacement probability during mutation.
    pub mutation_rate: f64,
    pub generations: usize,
    pub seed: u64,
    pub fitness_metric: FitnessMetric,
    /// Decode temperature for fitness evaluations.
    pub temperature: f64,
    /// Whether immigrants mutate like offspring before entering the
    /// population. Winners never mutate either way.
    pub mutate_immigrants: bool,
    /// Stop once best fitness reaches this value.
    pub fitness_target: Option<f64>,
    /// Stop once this many backend calls (evaluation and generation
    /// combined) have been made.
    pub max_backend_calls: Option<u64>,
    /// Stop once this much wall-clock time has elapsed.
    pub time_limit: Option<Duration>,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 32,
            n_alleles: 8,
            tournament_size: 4,
            crossover_probability: 1.0,
            mutation_rate: 0.1,
            generations: 40,
            seed: 0,
            fitness_metric: FitnessMetric::Accuracy,
            temperature: 0.0,
            mutate_immigrants: true,
            fitness_target: None,
            max_backend_calls: None,
            time_limit: None,
        }
    }
}

impl GaConfig {
    /// Check the structural invariants that make the generation cycle
    /// close: tournaments partition the population, and winners plus one
    /// immigrant and two offspring per winner rebuild it exactly.
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 || self.tournament_size == 0 {
            return Err(Error::InvalidConfig(
                "population_size and tournament_size must be positive".into(),
            ));
        }
        if self.population_size % self.tournament_size != 0 {
            return Err(Error::InvalidConfig(format!(
                "population_size {} is not divisible by tournament_size {}",
                self.population_size, self.tournament_size
            )));
        }
        let survivors = self.population_size / self.tournament_size;
        if survivors * 4 != self.population_size {
            return Err(Error::InvalidConfig(format!(
                "population of {} with {} survivors cannot be rebuilt as survivors + immigrants + 2 offspring each",
                self.population_size, survivors
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover_probability) {
            return Err(Error::InvalidConfig(format!(
                "crossover_probability must lie in [0, 1], got {}",
                self.crossover_probability
            )));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::InvalidConfig(format!(
                "mutation_rate must lie in [0, 1], got {}",
                self.mutation_rate
            )));
        }
        if self.n_alleles == 0 {
            return Err(Error::InvalidConfig("n_alleles must be positive".into()));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "temperature must be a finite non-negative number, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Winners kept per generation.
    pub fn survivors(&self) -> usize {
        self.population_size / self.tournament_size
    }
}

/// The cumulative set of example-label pairs mutation may draw from:
/// every allele that has ever been in the population, initial and
/// immigrant alike. Insertion order is preserved and texts are unique.
#[derive(Debug, Clone, Default)]
pub struct GenePool {
    items: Vec<LabeledExample>,
    texts: std::collections::BTreeSet<String>,
}

impl GenePool {
    pub fn new() -> Self {
        GenePool::default()
    }

    /// Add one allele; duplicates by text are ignored.
    pub fn insert(&mut self, example: &LabeledExample) -> bool {
        if self.texts.insert(example.text().to_string()) {
            self.items.push(example.clone());
            true
        } else {
            false
        }
    }

    pub fn extend_from(&mut self, candidates: &[Candidate]) {
        for candidate in candidates {
            for allele in candidate.alleles() {
                self.insert(allele);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[LabeledExample] {
        &self.items
    }
}

/// A full generation of candidates plus the pool they evolve against.
#[derive(Debug, Clone)]
pub struct Population {
    pub candidates: Vec<Candidate>,
    pub generation_index: usize,
    pub gene_pool: GenePool,
}

/// One allele snapshot inside a trace record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceAllele {
    pub text: String,
    pub label: String,
}

/// Per-generation progress record; the line format of trace files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub diversity: f64,
    pub best_alleles: Vec<TraceAllele>,
}

/// The whole run's records, generation 0 (initial population) onward.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GaTrace {
    pub records: Vec<TraceRecord>,
}

/// Result of an optimization run.
#[derive(Debug, Clone)]
pub struct GaRun {
    /// Highest-fitness candidate ever observed (ties keep the earliest).
    pub best: Candidate,
    pub trace: GaTrace,
    /// Total backend calls made, evaluation and generation combined.
    pub backend_calls: u64,
}

/// Deal alleles to the initial population: per label, a shuffled deck of
/// the training examples is consumed without replacement across the whole
/// population and reshuffled only once no eligible card remains, so early
/// candidates cannot hoard repeats while unseen examples wait.
struct Dealer<'a> {
    per_label_pools: Vec<Vec<&'a LabeledExample>>,
    decks: Vec<Vec<&'a LabeledExample>>,
}

impl<'a> Dealer<'a> {
    fn new(
        train: &'a [LabeledExample],
        label_set: &LabelSet,
        per_label_need: usize,
    ) -> Result<Self> {
        let mut per_label_pools = Vec::with_capacity(label_set.len());
        for label in label_set.iter() {
            let pool: Vec<&LabeledExample> =
                train.iter().filter(|e| e.label() == label).collect();
            let distinct: std::collections::BTreeSet<&str> =
                pool.iter().map(|e| e.text()).collect();
            if distinct.len() < per_label_need {
                return Err(Error::InsufficientExamples {
                    label: label.name().to_string(),
                    needed: per_label_need,
                    available: distinct.len(),
                });
            }
            per_label_pools.push(pool);
        }
        let decks = vec![Vec::new(); per_label_pools.len()];
        Ok(Dealer {
            per_label_pools,
            decks,
        })
    }

    /// Draw one example of the given label whose text is not in `taken`.
    fn draw(
        &mut self,
        label_index: usize,
        taken: &std::collections::BTreeSet<&str>,
        rng: &mut ChaCha8Rng,
    ) -> LabeledExample {
        let deck = &mut self.decks[label_index];
        if let Some(pos) = deck.iter().position(|e| !taken.contains(e.text())) {
            return deck.remove(pos).clone();
        }
        // Deck exhausted (or holds only texts this candidate already
        // has): replenish with a freshly shuffled full pool. The
        // constructor guaranteed an eligible card exists in a full pool.
        let mut fresh = self.per_label_pools[label_index].clone();
        fresh.shuffle(rng);
        deck.extend(fresh);
        let pos = deck
            .iter()
            .position(|e| !taken.contains(e.text()))
            .expect("full deck contains an eligible example");
        deck.remove(pos).clone()
    }
}

/// Build the initial population: `population_size` candidates, each with
/// an equal number of alleles per label, dealt as described on [`Dealer`].
/// Allele order within a candidate is shuffled; order is part of the
/// genome.
pub fn init_population(
    train: &[LabeledExample],
    config: &GaConfig,
    label_set: &LabelSet,
    rng: &mut ChaCha8Rng,
) -> Result<Population> {
    config.validate()?;
    if config.n_alleles % label_set.len() != 0 {
        return Err(Error::InvalidConfig(format!(
            "allele count {} must be a multiple of the {} labels",
            config.n_alleles,
            label_set.len()
        )));
    }
    let per_label = config.n_alleles / label_set.len();
    let mut dealer = Dealer::new(train, label_set, per_label)?;

    let mut candidates = Vec::with_capacity(config.population_size);
    for _ in 0..config.population_size {
        let mut alleles: Vec<LabeledExample> = Vec::with_capacity(config.n_alleles);
        for label_index in 0..label_set.len() {
            for _ in 0..per_label {
                let taken: std::collections::BTreeSet<&str> =
                    alleles.iter().map(|e| e.text()).collect();
                let drawn = dealer.draw(label_index, &taken, rng);
                alleles.push(drawn);
            }
        }
        alleles.shuffle(rng);
        candidates.push(Candidate::new(alleles)?);
    }

    let mut gene_pool = GenePool::new();
    gene_pool.extend_from(&candidates);
    Ok(Population {
        candidates,
        generation_index: 0,
        gene_pool,
    })
}

/// Give every candidate a fitness. Candidates that already carry one are
/// untouched; otherwise the cache (keyed by ordered allele content) is
/// consulted before calling the evaluator, so repeated content is never
/// re-scored against the backend.
pub fn evaluate(
    population: &mut Population,
    cache: &mut BTreeMap<String, f64>,
    fitness: &mut dyn FnMut(&Candidate) -> Result<f64>,
) -> Result<()> {
    for candidate in &mut population.candidates {
        if candidate.fitness().is_some() {
            continue;
        }
        let key = candidate.cache_key();
        let value = match cache.get(&key) {
            Some(&v) => v,
            None => {
                let v = fitness(candidate)?;
                cache.insert(key, v);
                v
            }
        };
        candidate.set_fitness(value)?;
    }
    Ok(())
}

/// Winner of each explicit group: highest fitness, ties to the lowest
/// candidate index. Exposed for hand-constructed group tests; the public
/// entry point is `tournament_select`.
pub(crate) fn winners_of_groups(
    candidates: &[Candidate],
    groups: &[Vec<usize>],
) -> Result<Vec<Candidate>> {
    let mut winners = Vec::with_capacity(groups.len());
    for group in groups {
        let mut best: Option<(usize, f64)> = None;
        for &index in group {
            let fitness = candidates[index]
                .fitness()
                .ok_or(Error::UnevaluatedCandidate)?;
            let better = match best {
                None => true,
                Some((best_index, best_fitness)) => {
                    fitness > best_fitness || (fitness == best_fitness && index < best_index)
                }
            };
            if better {
                best = Some((index, fitness));
            }
        }
        let (index, _) = best.expect("groups are non-empty");
        winners.push(candidates[index].clone());
    }
    Ok(winners)
}

/// Partition the population into random groups of `tournament_size` and
/// keep each group's best candidate. Every candidate sits in exactly one
/// group, so the global best is always among the winners.
pub fn tournament_select(
    population: &Population,
    config: &GaConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Candidate>> {
    let size = population.candidates.len();
    if size % config.tournament_size != 0 {
        return Err(Error::InvalidConfig(format!(
            "population of {size} does not split into tournaments of {}",
            config.tournament_size
        )));
    }
    let mut indices: Vec<usize> = (0..size).collect();
    indices.shuffle(rng);
    let groups: Vec<Vec<usize>> = indices
        .chunks(config.tournament_size)
        .map(|chunk| chunk.to_vec())
        .collect();
    winners_of_groups(&population.candidates, &groups)
}

/// Build `count` immigrant candidates whose alleles are all freshly
/// generated from training-set seed triplets, class-balanced and
/// duplicate-free within each candidate. Every new allele joins the gene
/// pool.
pub fn immigrate(
    backend: &dyn CompletionBackend,
    train: &[LabeledExample],
    count: usize,
    config: &GaConfig,
    label_set: &LabelSet,
    rng: &mut ChaCha8Rng,
    gene_pool: &mut GenePool,
) -> Result<Vec<Candidate>> {
    if config.n_alleles % label_set.len() != 0 {
        return Err(Error::InvalidConfig(format!(
            "allele count {} must be a multiple of the {} labels",
            config.n_alleles,
            label_set.len()
        )));
    }
    let per_label = config.n_alleles / label_set.len();
    let mut immigrants = Vec::with_capacity(count);
    for _ in 0..count {
        let mut alleles: Vec<LabeledExample> = Vec::with_capacity(config.n_alleles);
        for label in label_set.iter() {
            for _ in 0..per_label {
                let mut attempts = 0;
                let allele = loop {
                    let candidate_allele = generate_example(backend, train, label, rng)?;
                    if !alleles.iter().any(|a| a.text() == candidate_allele.text()) {
                        break candidate_allele;
                    }
                    attempts += 1;
                    if attempts >= IMMIGRANT_ALLELE_ATTEMPTS {
                        return Err(Error::AlleleGenerationExhausted { attempts });
                    }
                };
                alleles.push(allele);
            }
        }
        alleles.shuffle(rng);
        let candidate = Candidate::new(alleles)?;
        for allele in candidate.alleles() {
            gene_pool.insert(allele);
        }
        immigrants.push(candidate);
    }
    Ok(immigrants)
}

/// Swap alleles between copies of the parents at the given positions,
/// skipping any swap that is a no-op or would duplicate a text within an
/// offspring. Used by `pmx_crossover`, which picks the positions.
pub(crate) fn crossover_at(
    parent_a: &Candidate,
    parent_b: &Candidate,
    positions: &[usize],
) -> Result<(Candidate, Candidate)> {
    if parent_a.alleles().len() != parent_b.alleles().len() {
        return Err(Error::InvalidConfig(format!(
            "crossover parents have {} and {} alleles",
            parent_a.alleles().len(),
            parent_b.alleles().len()
        )));
    }
    let mut a: Vec<LabeledExample> = parent_a.alleles().to_vec();
    let mut b: Vec<LabeledExample> = parent_b.alleles().to_vec();
    for &p in positions {
        if a[p].text() == b[p].text() {
            continue;
        }
        let a_would_duplicate = a
            .iter()
            .enumerate()
            .any(|(i, e)| i != p && e.text() == b[p].text());
        let b_would_duplicate = b
            .iter()
            .enumerate()
            .any(|(i, e)| i != p && e.text() == a[p].text());
        if a_would_duplicate || b_would_duplicate {
            continue;
        }
        std::mem::swap(&mut a[p], &mut b[p]);
    }
    Ok((Candidate::new(a)?, Candidate::new(b)?))
}

/// Cross two parents: swap k positions, k uniform in [1, n-1], chosen
/// uniformly without replacement. Offspring carry no fitness.
pub fn pmx_crossover(
    parent_a: &Candidate,
    parent_b: &Candidate,
    rng: &mut ChaCha8Rng,
) -> Result<(Candidate, Candidate)> {
    let n = parent_a.alleles().len();
    if n < 2 {
        return Err(Error::InvalidConfig(
            "crossover needs at least 2 alleles".into(),
        ));
    }
    let k = rng.gen_range(1..n);
    let mut positions: Vec<usize> = sample(rng, n, k).into_vec();
    positions.sort_unstable();
    crossover_at(parent_a, parent_b, &positions)
}

/// Mutate a candidate: each allele is independently replaced with
/// probability `mutation_rate` by a uniform draw from the gene pool
/// excluding every text currently in the candidate. Positions whose
/// eligible pool is empty are left alone. Fitness survives only an
/// entirely untouched candidate.
pub fn mutate(
    candidate: &Candidate,
    gene_pool: &GenePool,
    config: &GaConfig,
    rng: &mut ChaCha8Rng,
) -> Candidate {
    let mut alleles: Vec<LabeledExample> = candidate.alleles().to_vec();
    let mut changed = false;
    for position in 0..alleles.len() {
        // One probability draw per position, whether or not it can fire,
        // keeps the RNG stream aligned across pool states.
        let fires = rng.gen::<f64>() < config.mutation_rate;
        if !fires {
            continue;
        }
        let current: std::collections::BTreeSet<&str> =
            alleles.iter().map(|e| e.text()).collect();
        let eligible: Vec<&LabeledExample> = gene_pool
            .items()
            .iter()
            .filter(|e| !current.contains(e.text()))
            .collect();
        if eligible.is_empty() {
            continue;
        }
        alleles[position] = eligible[rng.gen_range(0..eligible.len())].clone();
        changed = true;
    }
    if !changed {
        return candidate.clone();
    }
    Candidate::new(alleles).expect("replacements exclude existing texts")
}

/// Mean over all unordered candidate pairs of the fraction of differing
/// alleles (by text). 0 for a population of clones, 1 for pairwise
/// disjoint candidates; fewer than two candidates scores 0.
pub fn diversity(candidates: &[Candidate]) -> f64 {
    if candidates.len() < 2 {
        return 0.0;
    }
    let texts: Vec<std::collections::BTreeSet<&str>> = candidates
        .iter()
        .map(|c| c.alleles().iter().map(|a| a.text()).collect())
        .collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..candidates.len() {
        for j in (i + 1)..candidates.len() {
            let shared = texts[i].intersection(&texts[j]).count();
            let n = candidates[i].alleles().len().max(1);
            total += 1.0 - shared as f64 / n as f64;
            pairs += 1;
        }
    }
    total / pairs as f64
}

fn best_of(candidates: &[Candidate]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (index, candidate) in candidates.iter().enumerate() {
        let fitness = candidate.fitness().ok_or(Error::UnevaluatedCandidate)?;
        let better = match best {
            None => true,
            Some((_, best_fitness)) => fitness > best_fitness,
        };
        if better {
            best = Some((index, fitness));
        }
    }
    best.ok_or(Error::UnevaluatedCandidate)
}

fn record_for(population: &Population) -> Result<TraceRecord> {
    let (best_index, best_fitness) = best_of(&population.candidates)?;
    let mean_fitness = population
        .candidates
        .iter()
        .map(|c| c.fitness().unwrap_or(0.0))
        .sum::<f64>()
        / population.candidates.len() as f64;
    let best_alleles = population.candidates[best_index]
        .alleles()
        .iter()
        .map(|a| TraceAllele {
            text: a.text().to_string(),
            label: a.label().name().to_string(),
        })
        .collect();
    Ok(TraceRecord {
        generation: population.generation_index,
        best_fitness,
        mean_fitness,
        diversity: diversity(&population.candidates),
        best_alleles,
    })
}

/// How the candidates of one generation were constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepBreakdown {
    /// Tournament winners carried over unchanged.
    pub winners: usize,
    /// Candidates built entirely from freshly generated alleles.
    pub immigrants: usize,
    /// Candidates produced by crossover (or clone pass-through).
    pub offspring: usize,
}

impl StepBreakdown {
    pub fn total(&self) -> usize {
        self.winners + self.immigrants + self.offspring
    }
}

/// Advance one generation: select winners, generate immigrants, cross
/// each winner with its same-indexed immigrant (or pass both through,
/// governed by the crossover probability), mutate offspring and
/// optionally immigrants, and reassemble winners + immigrants + offspring
/// into the next population. The returned breakdown counts each
/// construction path; it always sums to the population size.
pub fn step(
    population: &mut Population,
    backend: &dyn CompletionBackend,
    train: &[LabeledExample],
    config: &GaConfig,
    label_set: &LabelSet,
    rng: &mut ChaCha8Rng,
) -> Result<StepBreakdown> {
    let winners = tournament_select(population, config, rng)?;
    let survivors = winners.len();
    let immigrants = immigrate(
        backend,
        train,
        survivors,
        config,
        label_set,
        rng,
        &mut population.gene_pool,
    )?;

    let mut offspring = Vec::with_capacity(survivors * 2);
    for i in 0..survivors {
        let crossed = rng.gen::<f64>() < config.crossover_probability;
        if crossed {
            let (a, b) = pmx_crossover(&winners[i], &immigrants[i], rng)?;
            offspring.push(a);
            offspring.push(b);
        } else {
            offspring.push(winners[i].clone());
            offspring.push(immigrants[i].clone());
        }
    }

    let mutate_range_start = if config.mutate_immigrants {
        survivors
    } else {
        survivors * 2
    };
    let breakdown = StepBreakdown {
        winners: survivors,
        immigrants: immigrants.len(),
        offspring: offspring.len(),
    };
    let mut candidates = Vec::with_capacity(config.population_size);
    candidates.extend(winners);
    candidates.extend(immigrants);
    candidates.extend(offspring);
    for candidate in candidates.iter_mut().skip(mutate_range_start) {
        *candidate = mutate(candidate, &population.gene_pool, config, rng);
    }

    population.candidates = candidates;
    population.generation_index += 1;
    Ok(breakdown)
}

/// Run the optimization end to end. See [`run_traced`] for streaming
/// trace records as they are produced.
pub fn run(
    backend: &dyn CompletionBackend,
    bundle: &DatasetBundle,
    template: &PromptTemplate,
    config: &GaConfig,
) -> Result<GaRun> {
    run_traced(backend, bundle, template, config, |_| Ok(()))
}

/// Run the optimization, invoking `on_record` with each generation's
/// trace record the moment it exists, so callers can persist progress
/// before a long run either finishes or dies.
pub fn run_traced(
    backend: &dyn CompletionBackend,
    bundle: &DatasetBundle,
    template: &PromptTemplate,
    config: &GaConfig,
    mut on_record: impl FnMut(&TraceRecord) -> Result<()>,
) -> Result<GaRun> {
    config.validate()?;
    let started = std::time::Instant::now();
    let counting = CountingBackend::new(backend);
    let label_set = bundle.label_set.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cache: BTreeMap<String, f64> = BTreeMap::new();
    let mut trace = GaTrace::default();

    let mut population = init_population(&bundle.train, config, &label_set, &mut rng)?;
    let mut best: Option<Candidate> = None;

    let finish_generation = |population: &mut Population,
                                 cache: &mut BTreeMap<String, f64>,
                                 best: &mut Option<Candidate>,
                                 trace: &mut GaTrace|
     -> Result<TraceRecord> {
        let mut fitness = |candidate: &Candidate| -> Result<f64> {
            match config.fitness_metric {
                FitnessMetric::Accuracy => prompt::accuracy(
                    &counting,
                    template,
                    candidate,
                    &bundle.validation,
                    &label_set,
                    config.temperature,
                ),
            }
        };
        evaluate(population, cache, &mut fitness)?;
        let record = record_for(population)?;
        let (best_index, best_fitness) = best_of(&population.candidates)?;
        let improved = match best {
            None => true,
            Some(b) => best_fitness > b.fitness().expect("best is always evaluated"),
        };
        if improved {
            *best = Some(population.candidates[best_index].clone());
        }
        trace.records.push(record.clone());
        Ok(record)
    };

    let record = finish_generation(&mut population, &mut cache, &mut best, &mut trace)?;
    on_record(&record)?;

    for _ in 0..config.generations {
        if should_stop(config, &trace, counting.calls(), started) {
            break;
        }
        step(
            &mut population,
            &counting,
            &bundle.train,
            config,
            &label_set,
            &mut rng,
        )?;
        let record = finish_generation(&mut population, &mut cache, &mut best, &mut trace)?;
        on_record(&record)?;
    }

    Ok(GaRun {
        best: best.expect("at least one generation evaluated"),
        trace,
        backend_calls: counting.calls(),
    })
}

fn should_stop(
    config: &GaConfig,
    trace: &GaTrace,
    calls_so_far: u64,
    started: std::time::Instant,
) -> bool {
    if let Some(target) = config.fitness_target {
        if trace
            .records
            .last()
            .is_some_and(|r| r.best_fitness >= target)
        {
            return true;
        }
    }
    if let Some(budget) = config.max_backend_calls {
        if calls_so_far >= budget {
            return true;
        }
    }
    if let Some(limit) = config.time_limit {
        if started.elapsed() >= limit {
            return true;
        }
    }
    false
}
