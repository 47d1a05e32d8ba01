//! Release-gate suite. Each test states one contract of the crate,
//! drives it through public interfaces only, and prints a single
//! PASS/FAIL line (visible with `--nocapture`, and in the captured
//! output of any failure). Tolerances are pinned in the assertions.

mod common;

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::panic::AssertUnwindSafe;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use promptforge::augment::{self, AugmentationSpec};
use promptforge::backend::SimulatedBackend;
use promptforge::data::{label_counts, Label, LabeledExample};
use promptforge::eval::{self, GridSpec, Split};
use promptforge::ga::{self, GaConfig, GenePool, Population, StepBreakdown};
use promptforge::prompt::Candidate;
use promptforge::prompt::{self, PromptTemplate};
use promptforge::stats;

fn criterion(number: u32, name: &str, body: impl FnOnce()) {
    let result = std::panic::catch_unwind(AssertUnwindSafe(body));
    match &result {
        Ok(()) => println!("criterion {number} ({name}): PASS"),
        Err(_) => println!("criterion {number} ({name}): FAIL"),
    }
    if let Err(panic) = result {
        std::panic::resume_unwind(panic);
    }
}

fn assert_unique_alleles(population: &Population) {
    for candidate in &population.candidates {
        let texts: BTreeSet<&str> = candidate.alleles().iter().map(|a| a.text()).collect();
        assert_eq!(
            texts.len(),
            candidate.alleles().len(),
            "candidate holds a duplicate allele"
        );
    }
}

fn best_fitness(population: &Population) -> f64 {
    population
        .candidates
        .iter()
        .filter_map(|c| c.fitness())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn c1_generation_invariants_hold_across_fifty_seeded_runs() {
    criterion(1, "generation invariants over 50 seeded runs", || {
        let started = Instant::now();
        let bundle = common::fixture_bundle();
        assert_eq!(bundle.validation.len(), 26, "fitness fixture is 26 questions");
        let label_set = bundle.label_set.clone();
        let template = PromptTemplate::for_labels(&label_set);

        for seed in 0..50u64 {
            let backend = SimulatedBackend::new(seed);
            let config = GaConfig {
                generations: 10,
                seed,
                ..GaConfig::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut cache: BTreeMap<String, f64> = BTreeMap::new();
            let mut fitness = |candidate: &Candidate| {
                prompt::accuracy(
                    &backend,
                    &template,
                    candidate,
                    &bundle.validation,
                    &label_set,
                    config.temperature,
                )
            };

            let mut population =
                ga::init_population(&bundle.train, &config, &label_set, &mut rng).unwrap();
            ga::evaluate(&mut population, &mut cache, &mut fitness).unwrap();
            assert_eq!(population.candidates.len(), 32);
            assert_unique_alleles(&population);
            let mut best = best_fitness(&population);

            for generation in 0..config.generations {
                let breakdown = ga::step(
                    &mut population,
                    &backend,
                    &bundle.train,
                    &config,
                    &label_set,
                    &mut rng,
                )
                .unwrap();
                assert_eq!(
                    breakdown,
                    StepBreakdown {
                        winners: 8,
                        immigrants: 8,
                        offspring: 16,
                    },
                    "seed {seed} generation {generation}"
                );
                assert_eq!(population.candidates.len(), 32);
                ga::evaluate(&mut population, &mut cache, &mut fitness).unwrap();
                assert_unique_alleles(&population);
                let now = best_fitness(&population);
                assert!(
                    now >= best,
                    "best fitness fell from {best} to {now} (seed {seed}, generation {generation})"
                );
                best = now;
            }
        }
        assert!(
            started.elapsed() < Duration::from_secs(120),
            "50 runs took {:?}",
            started.elapsed()
        );
    });
}

#[test]
fn c2_optimizer_learns_a_separable_dataset() {
    criterion(2, "optimizer reaches thresholds on separable data", || {
        let started = Instant::now();
        let bundle = common::separable_bundle(1234);
        assert_eq!(bundle.train.len(), 26);
        assert_eq!(bundle.validation.len(), 26);
        assert_eq!(bundle.test.len(), 20);

        // The dataset really is separable: a keyword-count oracle is
        // perfect on the held-out split.
        let oracle_correct = bundle
            .test
            .iter()
            .filter(|example| common::keyword_oracle(example.text()) == *example.label())
            .count();
        assert_eq!(oracle_correct, 20, "keyword oracle must be perfect");

        let backend = SimulatedBackend::new(7);
        let config = GaConfig {
            seed: 7,
            ..GaConfig::default()
        };
        assert_eq!(config.generations, 40, "defaults drive the run");
        let template = PromptTemplate::for_labels(&bundle.label_set);
        let run = ga::run(&backend, &bundle, &template, &config).unwrap();

        let best_validation = run.best.fitness().unwrap();
        assert!(
            best_validation >= 0.9,
            "best validation fitness {best_validation} < 0.9"
        );
        let test_accuracy = prompt::accuracy(
            &backend,
            &template,
            &run.best,
            &bundle.test,
            &bundle.label_set,
            config.temperature,
        )
        .unwrap();
        assert!(test_accuracy >= 0.8, "test accuracy {test_accuracy} < 0.8");
        assert!(
            started.elapsed() < Duration::from_secs(300),
            "run took {:?}",
            started.elapsed()
        );
    });
}

#[test]
fn c3_one_generation_reassembles_through_counted_paths() {
    criterion(3, "tournament 32->8, +8 immigrants, 16 offspring", || {
        let bundle = common::fixture_bundle();
        let label_set = bundle.label_set.clone();
        let template = PromptTemplate::for_labels(&label_set);
        let backend = SimulatedBackend::new(2);
        let config = GaConfig::default();
        let mut cache: BTreeMap<String, f64> = BTreeMap::new();
        let mut fitness = |candidate: &Candidate| {
            prompt::accuracy(
                &backend,
                &template,
                candidate,
                &bundle.validation,
                &label_set,
                config.temperature,
            )
        };

        // The selection stage alone: 32 candidates reduce to 8 winners.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut population =
            ga::init_population(&bundle.train, &config, &label_set, &mut rng).unwrap();
        assert_eq!(population.candidates.len(), 32);
        ga::evaluate(&mut population, &mut cache, &mut fitness).unwrap();
        let winners = ga::tournament_select(&population, &config, &mut rng).unwrap();
        assert_eq!(winners.len(), 8, "tournament reduces 32 to 8");

        // The full generation: construction counters must account for
        // every candidate with zero tolerance.
        let breakdown = ga::step(
            &mut population,
            &backend,
            &bundle.train,
            &config,
            &label_set,
            &mut rng,
        )
        .unwrap();
        assert_eq!(
            breakdown,
            StepBreakdown {
                winners: 8,
                immigrants: 8,
                offspring: 16,
            }
        );
        assert_eq!(breakdown.total(), 32);
        assert_eq!(population.candidates.len(), 32);
    });
}

#[test]
fn c4_statistics_match_an_independent_oracle() {
    criterion(4, "t-test agrees with integration oracle", || {
        // Twenty random sample pairs against the from-scratch Welch
        // reference whose p-value comes from numerical integration.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for case in 0..20 {
            let draw = |rng: &mut ChaCha8Rng| {
                use rand::Rng;
                let n = rng.gen_range(3..=30);
                let shift: f64 = rng.gen_range(-2.0..2.0);
                let scale: f64 = rng.gen_range(0.1..3.0);
                (0..n)
                    .map(|_| shift + scale * rng.gen_range(-1.0..1.0))
                    .collect::<Vec<f64>>()
            };
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            let ours = stats::two_sample_t_test(&a, &b).unwrap();
            let (t_ref, df_ref, p_ref) = common::welch_reference(&a, &b);
            assert!(
                (ours.t - t_ref).abs() <= 1e-9 * t_ref.abs().max(1.0),
                "case {case}: t {} vs {t_ref}",
                ours.t
            );
            assert!(
                (ours.degrees_of_freedom - df_ref).abs() <= 1e-9 * df_ref,
                "case {case}: df {} vs {df_ref}",
                ours.degrees_of_freedom
            );
            assert!(
                (ours.p - p_ref).abs() <= 1e-6,
                "case {case}: p {} vs {p_ref}",
                ours.p
            );
        }

        // Mean and standard error against their textbook formulas.
        let values = vec![0.2, 0.45, 0.5, 0.65, 0.8];
        let (mean, se) = stats::summarize(&values).unwrap();
        let hand_mean = values.iter().sum::<f64>() / 5.0;
        let hand_var = values
            .iter()
            .map(|v| (v - hand_mean).powi(2))
            .sum::<f64>()
            / 4.0;
        let hand_se = (hand_var / 5.0).sqrt();
        assert!((mean - hand_mean).abs() <= 1e-12);
        assert!((se - hand_se).abs() <= 1e-12);

        // Five-run samples shaped like a baseline-versus-augmented
        // comparison: clearly significant, direction favoring the
        // second sample.
        let baseline = common::five_points(0.49, 0.028);
        let augmented = common::five_points(0.67, 0.008);
        let (m_base, se_base) = stats::summarize(&baseline).unwrap();
        let (m_aug, se_aug) = stats::summarize(&augmented).unwrap();
        assert!((m_base - 0.49).abs() <= 1e-12 && (se_base - 0.028).abs() <= 1e-12);
        assert!((m_aug - 0.67).abs() <= 1e-12 && (se_aug - 0.008).abs() <= 1e-12);
        let test = stats::two_sample_t_test(&baseline, &augmented).unwrap();
        assert!(test.p < 0.01, "p {} not significant", test.p);
        assert!(test.t < 0.0, "direction must favor the second sample");
    });
}

#[test]
fn c5_augmentation_sizes_balance_and_dedup() {
    criterion(5, "augmented sizes, balance, dedup identity", || {
        let bundle = common::fixture_bundle();
        let train = &bundle.train;
        for n in [0usize, 10, 100, 1000, 10_000] {
            let backend = SimulatedBackend::new(3);
            let spec = AugmentationSpec::new(n, 99);
            let started = Instant::now();
            let augmented = augment::augment_training_set(&backend, train, &spec).unwrap();
            let elapsed = started.elapsed();

            assert_eq!(augmented.examples.len(), train.len() + n, "size for n={n}");
            for (original, kept) in train.iter().zip(&augmented.examples) {
                assert_eq!(original.text(), kept.text(), "train prefix preserved");
            }
            let counts = label_counts(&augmented.examples, &bundle.label_set).unwrap();
            assert_eq!(counts[0], counts[1], "per-label balance for n={n}");

            let distinct: BTreeSet<&str> =
                augmented.examples.iter().map(|e| e.text()).collect();
            assert_eq!(
                distinct.len() + augmented.duplicate_warnings,
                train.len() + n,
                "every example is either a fresh text or a flagged duplicate (n={n})"
            );
            if n == 10_000 {
                assert!(elapsed < Duration::from_secs(60), "n=10000 took {elapsed:?}");
            }
        }
    });
}

#[test]
fn c6_crossover_and_mutation_micro_oracles() {
    criterion(6, "two-allele swap table and mutation rate band", || {
        let example = |text: &str, label: &str| {
            LabeledExample::seed(text, Label::new(label).unwrap()).unwrap()
        };

        // With two alleles the operator must pick exactly one swap
        // position, so the outcome table has exactly two rows:
        //   swap position 0: (gamma,beta) and (alpha,delta)
        //   swap position 1: (alpha,delta) and (gamma,beta)
        let parent_a = Candidate::new(vec![
            example("alpha", "Data"),
            example("beta", "Other"),
        ])
        .unwrap();
        let parent_b = Candidate::new(vec![
            example("gamma", "Data"),
            example("delta", "Other"),
         ])
        .unwrap();
        let texts = |candidate: &Candidate| -> Vec<String> {
            candidate
                .alleles()
                .iter()
                .map(|a| a.text().to_string())
                .collect()
        };
        let swap_position_zero = (vec!["gamma".to_string(), "beta".to_string()],
                                  vec!["alpha".to_string(), "delta".to_string()]);
        let swap_position_one = (vec!["alpha".to_string(), "delta".to_string()],
                                 vec!["gamma".to_string(), "beta".to_string()]);
        let mut seen = BTreeSet::new();
        for seed in 0..40u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (child_a, child_b) = ga::pmx_crossover(&parent_a, &parent_b, &mut rng).unwrap();
            let outcome = (texts(&child_a), texts(&child_b));
            if outcome == swap_position_zero {
                seen.insert(0);
            } else if outcome == swap_position_one {
                seen.insert(1);
            } else {
                panic!("outcome {outcome:?} is not in the two-row swap table");
            }
        }
        assert_eq!(seen.len(), 2, "both swap positions must occur across seeds");

        // Mutation at rate 0.1 on an 8-allele candidate replaces 0.8
        // alleles in expectation; the [0.75, 0.85] band is roughly
        // three binomial standard deviations wide at 10,000 trials.
        let candidate = Candidate::new(
            (0..8)
                .map(|i| example(&format!("original {i}"), if i % 2 == 0 { "Data" } else { "Other" }))
                .collect(),
        )
        .unwrap();
        let mut pool = GenePool::new();
        for allele in candidate.alleles() {
            pool.insert(allele);
        }
        for i in 0..40 {
            pool.insert(&example(
                &format!("replacement {i}"),
                if i % 2 == 0 { "Data" } else { "Other" },
            ));
        }
        let config = GaConfig::default();
        assert!((config.mutation_rate - 0.1).abs() < 1e-15);
        let trials = 10_000u64;
        let mut replacements = 0usize;
        for trial in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(trial);
            let mutated = ga::mutate(&candidate, &pool, &config, &mut rng);
            replacements += candidate
                .alleles()
                .iter()
                .zip(mutated.alleles())
                .filter(|(before, after)| before.text() != after.text())
                .count();
        }
        let mean = replacements as f64 / trials as f64;
        assert!(
            (0.75..=0.85).contains(&mean),
            "mean replacements per candidate {mean} outside [0.75, 0.85]"
        );
    });
}

#[test]
fn c7_diversity_hand_cases() {
    criterion(7, "diversity 0.5 hand case, clones 0, disjoint 1", || {
        let example = |text: &str| {
            LabeledExample::seed(text, Label::new("Data").unwrap()).unwrap()
        };
        let candidate = |texts: [&str; 2]| {
            Candidate::new(texts.iter().map(|t| example(t)).collect()).unwrap()
        };

        // Pairwise shared counts are all 1 of 2, so each pair differs
        // by exactly one half: mean over the three pairs is 0.5.
        let hand_case = [
            candidate(["a", "b"]),
            candidate(["a", "c"]),
            candidate(["b", "c"]),
        ];
        assert_eq!(ga::diversity(&hand_case), 0.5);

        let clones = [
            candidate(["a", "b"]),
            candidate(["a", "b"]),
            candidate(["a", "b"]),
        ];
        assert_eq!(ga::diversity(&clones), 0.0);

        let disjoint = [
            candidate(["a", "b"]),
            candidate(["c", "d"]),
            candidate(["e", "f"]),
        ];
        assert_eq!(ga::diversity(&disjoint), 1.0);
    });
}

#[test]
fn c8_cli_workflows_are_byte_reproducible() {
    criterion(8, "identical seeds give byte-identical outputs", || {
        let fixtures = common::fixture_path("");
        let train = fixtures.join("train.jsonl");
        let validation = fixtures.join("validation.jsonl");

        // A small candidate file: the first four examples of each label
        // from the training fixture.
        let staging = tempfile::tempdir().unwrap();
        let candidate_path = staging.path().join("candidate.jsonl");
        {
            let bundle = common::fixture_bundle();
            let mut picked: Vec<LabeledExample> = Vec::new();
            for label in bundle.label_set.labels() {
                picked.extend(
                    bundle
                        .train
                        .iter()
                        .filter(|e| e.label() == label)
                        .take(4)
                        .cloned(),
                );
            }
            promptforge::data::save_jsonl(&picked, &candidate_path).unwrap();
        }
        let grid_config_path = staging.path().join("grid.conf");
        std::fs::write(
            &grid_config_path,
            "temperatures = 0.0, 0.5\nmax_examples_values = 2, 3\nn_added_values = 0, 4\nrepeats = 2\n",
        )
        .unwrap();

        let s = |p: &std::path::Path| p.to_str().unwrap().to_string();
        // Each workflow's argv, with {out} placeholders for the
        // per-invocation output locations.
        let workflows: Vec<(&str, Vec<String>, Vec<&str>)> = vec![
            (
                "augment",
                vec![
                    "augment".into(),
                    "--train".into(),
                    s(&train),
                    "--n".into(),
                    "20".into(),
                    "--seed".into(),
                    "5".into(),
                    "--out".into(),
                    "{dir}/augmented.jsonl".into(),
                ],
                vec!["augmented.jsonl"],
            ),
            (
                "classify search",
                vec![
                    "classify".into(),
                    "search".into(),
                    "--model".into(),
                    s(&train),
                    "--max-examples".into(),
                    "5".into(),
                    "--temperature".into(),
                    "0.5".into(),
                    "--seed".into(),
                    "9".into(),
                    "--input".into(),
                    s(&validation),
                    "--out".into(),
                    "{dir}/search.csv".into(),
                ],
                vec!["search.csv"],
            ),
            (
                "classify prompt",
                vec![
                    "classify".into(),
                    "prompt".into(),
                    "--candidate".into(),
                    s(&candidate_path),
                    "--input".into(),
                    s(&validation),
                    "--backend-seed".into(),
                    "4".into(),
                    "--out".into(),
                    "{dir}/prompt.csv".into(),
                ],
                vec!["prompt.csv"],
            ),
            (
                "optimize",
                vec![
                    "optimize".into(),
                    "--train".into(),
                    s(&train),
                    "--validation".into(),
                    s(&validation),
                    "--generations".into(),
                    "3".into(),
                    "--population".into(),
                    "8".into(),
                    "--alleles".into(),
                    "4".into(),
                    "--seed".into(),
                    "13".into(),
                    "--backend-seed".into(),
                    "2".into(),
                    "--trace".into(),
                    "{dir}/trace.jsonl".into(),
                    "--best-out".into(),
                    "{dir}/best.jsonl".into(),
                ],
                vec!["trace.jsonl", "best.jsonl"],
            ),
            (
                "gridsearch",
                vec![
                    "gridsearch".into(),
                    "--bundle".into(),
                    s(&fixtures),
                    "--config".into(),
                    s(&grid_config_path),
                    "--seed".into(),
                    "21".into(),
                    "--backend-seed".into(),
                    "8".into(),
                    "--out".into(),
                    "{dir}".into(),
                ],
                vec!["report.json", "plot.csv"],
            ),
        ];

        for (name, argv_template, outputs) in workflows {
            let mut contents: Vec<Vec<Vec<u8>>> = Vec::new();
            for _ in 0..2 {
                let dir = tempfile::tempdir().unwrap();
                let dir_str = dir.path().to_str().unwrap();
                let argv: Vec<String> = std::iter::once("promptforge".to_string())
                    .chain(
                        argv_template
                            .iter()
                            .map(|a| a.replace("{dir}", dir_str)),
                    )
                    .collect();
                let code = promptforge::cli::run(&argv);
                assert_eq!(code, 0, "workflow `{name}` failed");
                contents.push(
                    outputs
                        .iter()
                        .map(|file| std::fs::read(dir.path().join(file)).unwrap())
                        .collect(),
                );
            }
            for (file, (first, second)) in outputs
                .iter()
                .zip(contents[0].iter().zip(contents[1].iter()))
            {
                assert_eq!(
                    first, second,
                    "workflow `{name}` output {file} differs between identical runs"
                );
            }
        }
    });
}

#[test]
fn c9_default_grid_shape_and_report_rows() {
    criterion(9, "default grid cells and report rows", || {
        let grid = GridSpec::default();
        assert_eq!(grid.temperatures, vec![0.0, 0.1, 0.5]);
        assert_eq!(grid.max_examples_values, vec![5, 10, 15, 20, 25]);
        assert_eq!(grid.n_added_values, vec![0, 10, 100, 1000, 10_000]);
        assert_eq!(grid.repeats, 5);

        let bundle = common::fixture_bundle();
        let backend = SimulatedBackend::new(6);
        let report = eval::run_grid(&backend, &bundle, &grid, 11).unwrap();

        // Exact cell enumeration: for every addition count, each of the
        // 3 temperatures crosses the neighbor budgets, with 100 joining
        // the budgets only beyond 100 additions.
        let mut expected: Vec<(usize, f64, usize)> = Vec::new();
        for &n in &grid.n_added_values {
            let mut budgets = grid.max_examples_values.clone();
            if n > 100 {
                budgets.push(100);
            }
            for &temperature in &grid.temperatures {
                for &max_examples in &budgets {
                    expected.push((n, temperature, max_examples));
                }
            }
        }
        assert_eq!(expected.len(), 81, "3*15 + 2*18 cells");
        let actual: Vec<(usize, f64, usize)> = report
            .cells
            .iter()
            .map(|cell| {
                (
                    cell.config.n_added,
                    cell.config.temperature,
                    cell.config.max_examples,
                )
            })
            .collect();
        assert_eq!(actual, expected, "cell enumeration in order");
        for cell in &report.cells {
            assert_eq!(cell.accuracies.len(), grid.repeats, "5 repeats per cell");
        }

        // Report emission: one (n_added, split) row per addition count
        // and split, validation before test within each count.
        let mut expected_rows: Vec<(usize, Split)> = Vec::new();
        for &n in &grid.n_added_values {
            expected_rows.push((n, Split::Validation));
            expected_rows.push((n, Split::Test));
        }
        let actual_rows: Vec<(usize, Split)> = report
            .plot_series
            .iter()
            .map(|row| (row.n_added, row.split))
            .collect();
        assert_eq!(actual_rows, expected_rows);
        assert_eq!(report.test_cells.len(), grid.n_added_values.len());
    });
}
