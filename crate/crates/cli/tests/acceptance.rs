//! Acceptance suite: every check runs sequentially (timings stay
//! uncontended) and prints one pass/fail line. The process exits nonzero if
//! any check fails.

use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use clap::Parser;

use streamcart::datagen::{generate_concept, generate_stream};
use streamcart::engine::train_stream;
use streamcart::schema::{AttrValue, AttributeSpec, Instance, Schema};
use streamcart::split::{best_two, decide_split, epsilon, LeafStats, SplitConfig, SplitDecision};
use streamcart::stream::{open_csv_stream, CountingSource, StreamSource};
use streamcart::tree::{DecisionTree, SplitKind};
use streamcart::{EngineConfig, GeneratorConfig, StreamingHistogram};
use streamcart_cli::opts::{Cli, Command};
use streamcart_cli::sweep::{run_sweep, SweepRow};
use streamcart_cli::train;

type CheckResult = Result<String, String>;

fn main() {
    let checks: Vec<(&str, fn() -> CheckResult)> = vec![
        ("01 serial-parallel tree identity", c01_serial_parallel_identity),
        ("02 accuracy invariance across batch size", c02_accuracy_invariance),
        ("03 batch-size evaluation and time trend", c03_batch_trend),
        ("04 bin-count time trend", c04_bin_trend),
        ("05 attribute-count time trend", c05_attr_trend),
        ("06 split-oracle equivalence", c06_split_oracle),
        ("07 histogram properties", c07_histogram_properties),
        ("08 confidence-bound behavior", c08_bound_behavior),
        ("09 single-pass audit", c09_single_pass),
        ("10 concept recovery", c10_concept_recovery),
    ];
    let mut failures = 0;
    for (name, check) in checks {
        let started = Instant::now();
        match check() {
            Ok(detail) => println!(
                "criterion {name}: PASS ({detail}; {:.1}s)",
                started.elapsed().as_secs_f64()
            ),
            Err(msg) => {
                failures += 1;
                println!("criterion {name}: FAIL - {msg}");
            }
        }
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}

fn parse_train(args: &[&str]) -> streamcart_cli::opts::TrainArgs {
    let cli = Cli::parse_from([&["streamcart", "train"], args].concat());
    match cli.command {
        Command::Train(t) => t,
        _ => unreachable!(),
    }
}

fn parse_sweep(args: &[&str]) -> streamcart_cli::opts::SweepArgs {
    let cli = Cli::parse_from([&["streamcart", "sweep"], args].concat());
    match cli.command {
        Command::Sweep(s) => s,
        _ => unreachable!(),
    }
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_budget(elapsed: Duration, budget_s: u64) -> Result<(), String> {
    check(
        elapsed <= Duration::from_secs(budget_s),
        format!(
            "runtime {:.1}s exceeds the {budget_s}s budget",
            elapsed.as_secs_f64()
        ),
    )
}

/// Criterion 1: on preset d1 (10,000 records) with a fixed seed, G=100 and
/// B=10, the final trees for P in {1, 2, 4, 8} are structurally equal and
/// the per-round stats files are byte-identical. Runtime < 30 s.
fn c01_serial_parallel_identity() -> CheckResult {
    let started = Instant::now();
    let base = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reference: Option<(DecisionTree, Vec<String>, String)> = None;
    for mappers in [1usize, 2, 4, 8] {
        let out = base.path().join(format!("p{mappers}"));
        let args = parse_train(&[
            "--preset", "d1", "--batch", "100", "--bins", "10", "--seed", "7",
            "--mappers", &mappers.to_string(),
            "--out", out.to_str().unwrap(),
        ]);
        let spec = streamcart_cli::source::SourceSpec::resolve(&args.stream, args.engine.seed)
            .map_err(|e| e.to_string())?;
        let outcome = train::train_once(&spec, &args.engine.to_config(), Some(&out), false)
            .map_err(|e| e.to_string())?;
        let stats: Vec<String> = (0..outcome.reports.len())
            .map(|i| std::fs::read_to_string(out.join(format!("round-{i}.stats"))).unwrap())
            .collect();
        let model = outcome.tree.serialize();
        match &reference {
            None => {
                check(stats.len() == 100, format!("expected 100 rounds, got {}", stats.len()))?;
                reference = Some((outcome.tree, stats, model));
            }
            Some((tree, ref_stats, ref_model)) => {
                check(
                    outcome.tree.tree_equal(tree),
                    format!("final tree differs at P={mappers}"),
                )?;
                check(
                    &stats == ref_stats,
                    format!("round stats differ at P={mappers}"),
                )?;
                check(
                    &model == ref_model,
                    format!("model file differs at P={mappers}"),
                )?;
            }
        }
    }
    within_budget(started.elapsed(), 30)?;
    let (tree, ..) = reference.unwrap();
    Ok(format!(
        "P in {{1,2,4,8}} byte-identical over 100 rounds; tree has {} nodes",
        tree.metrics().node_count
    ))
}

/// Shared batch-axis sweep for criteria 2 and 3: a 100,000-record stream
/// over three nominal attributes with tau=0, G in {1, 20, 200, 800}.
fn batch_sweep_rows() -> Result<&'static (Vec<SweepRow>, Duration), String> {
    static ROWS: OnceLock<Result<(Vec<SweepRow>, Duration), String>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let out = tempfile::tempdir().map_err(|e| e.to_string())?;
        let args = parse_sweep(&[
            "batch", "--values", "1,20,200,800",
            "--attrs", "0", "--nominal-attrs", "3", "--domain", "4",
            "--classes", "2", "--depth", "3", "--noise", "0.1",
            "--records", "100000", "--eval-records", "10000",
            "--tau", "0", "--delta", "1e-4", "--nmin", "200", "--seed", "42",
            "--out", out.path().to_str().unwrap(),
        ]);
        let started = Instant::now();
        let (_, rows) = run_sweep(&args).map_err(|e| e.to_string())?;
        Ok((rows, started.elapsed()))
    })
    .as_ref()
    .map_err(|e| e.clone())
}

/// Criterion 2: held-out accuracy for G in {20, 200, 800} is identical to
/// two decimal places, and the learned trees are nontrivial. Runtime < 2 min.
fn c02_accuracy_invariance() -> CheckResult {
    let (rows, elapsed) = batch_sweep_rows()?;
    let printed: Vec<String> = rows
        .iter()
        .filter(|r| r.value >= 20)
        .map(|r| format!("{:.2}", r.accuracy.percent()))
        .collect();
    check(printed.len() == 3, format!("expected 3 rows, got {}", printed.len()))?;
    check(
        printed.windows(2).all(|w| w[0] == w[1]),
        format!("accuracies differ: {printed:?}"),
    )?;
    check(
        rows.iter().all(|r| r.metrics.node_count >= 5),
        "learned trees are trivial".to_string(),
    )?;
    within_budget(*elapsed, 120)?;
    Ok(format!("G in {{20,200,800}} all at {}%", printed[0]))
}

/// Criterion 3: in the same sweep, the total split-evaluation count strictly
/// decreases as G grows, and G=800 runs at least twice as fast as G=1.
fn c03_batch_trend() -> CheckResult {
    let (rows, _) = batch_sweep_rows()?;
    let evals: Vec<u64> = rows.iter().map(|r| r.split_evals).collect();
    check(
        evals.windows(2).all(|w| w[0] > w[1]),
        format!("split evaluations not strictly decreasing: {evals:?}"),
    )?;
    let t1 = rows.first().unwrap().elapsed.as_secs_f64();
    let t800 = rows.last().unwrap().elapsed.as_secs_f64();
    check(
        t800 * 2.0 <= t1,
        format!("G=800 ({t800:.3}s) is not 2x faster than G=1 ({t1:.3}s)"),
    )?;
    Ok(format!(
        "evaluations {evals:?}; time G=1 {t1:.2}s vs G=800 {t800:.3}s"
    ))
}

/// Criterion 4: sweeping bins over {2, 10} on a 200,000-record stream takes
/// longer at 10 bins than at 2. Runtime < 3 min.
fn c04_bin_trend() -> CheckResult {
    let started = Instant::now();
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let args = parse_sweep(&[
        "bins", "--values", "2,10",
        "--attrs", "8", "--classes", "2", "--records", "200000",
        "--batch", "150", "--candidates", "64", "--seed", "42",
        "--eval-records", "5000",
        "--out", out.path().to_str().unwrap(),
    ]);
    let (_, rows) = run_sweep(&args).map_err(|e| e.to_string())?;
    let t2 = rows[0].elapsed.as_secs_f64();
    let t10 = rows[1].elapsed.as_secs_f64();
    check(
        t10 > t2,
        format!("10 bins ({t10:.2}s) not slower than 2 bins ({t2:.2}s)"),
    )?;
    within_budget(started.elapsed(), 180)?;
    Ok(format!("2 bins {t2:.2}s < 10 bins {t10:.2}s"))
}

/// Criterion 5: sweeping the attribute count over {2, 5, 10} with matched
/// record counts yields strictly increasing elapsed times.
fn c05_attr_trend() -> CheckResult {
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let args = parse_sweep(&[
        "attrs", "--values", "2,5,10",
        "--classes", "2", "--records", "100000", "--batch", "200",
        "--seed", "42", "--eval-records", "5000",
        "--out", out.path().to_str().unwrap(),
    ]);
    let (_, rows) = run_sweep(&args).map_err(|e| e.to_string())?;
    let times: Vec<f64> = rows.iter().map(|r| r.elapsed.as_secs_f64()).collect();
    check(
        times.windows(2).all(|w| w[0] < w[1]),
        format!("elapsed not strictly increasing: {times:?}"),
    )?;
    Ok(format!(
        "2/5/10 attrs: {:.2}s / {:.2}s / {:.2}s",
        times[0], times[1], times[2]
    ))
}

mod oracle {
    //! Brute-force split oracle on raw data, independent of the histogram
    //! path it checks.

    use super::*;

    pub fn dataset(seed: u64) -> (Arc<Schema>, Vec<Instance>) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(80..=200);
        let grids = [rng.gen_range(4..=8usize), rng.gen_range(4..=8usize)];
        let domain_size = rng.gen_range(3..=4usize);
        let schema = Arc::new(
            Schema::new(
                vec![
                    AttributeSpec::numeric("x0"),
                    AttributeSpec::numeric("x1"),
                    AttributeSpec::nominal(
                        "c",
                        (0..domain_size).map(|v| format!("v{v}")).collect(),
                    ),
                ],
                vec!["p".into(), "q".into()],
            )
            .unwrap(),
        );
        let signal_attr = rng.gen_range(0..3usize);
        let cutoff = match signal_attr {
            0 => rng.gen_range(1..grids[0]),
            1 => rng.gen_range(1..grids[1]),
            _ => 0,
        };
        let subset_mask: u32 = if signal_attr == 2 {
            rng.gen_range(1..(1u32 << domain_size) - 1)
        } else {
            0
        };
        let instances = (0..n)
            .map(|_| {
                let g0 = rng.gen_range(0..grids[0]);
                let g1 = rng.gen_range(0..grids[1]);
                let v = rng.gen_range(0..domain_size);
                let mut label = match signal_attr {
                    0 => usize::from(g0 >= cutoff),
                    1 => usize::from(g1 >= cutoff),
                    _ => usize::from(subset_mask >> v & 1 == 1),
                };
                if rng.gen::<f64>() < 0.05 {
                    label = 1 - label;
                }
                Instance {
                    values: vec![
                        AttrValue::Numeric(g0 as f64),
                        AttrValue::Numeric(g1 as f64),
                        AttrValue::Nominal(v),
                    ],
                    label,
                }
            })
            .collect();
        (schema, instances)
    }

    fn exact_gain(instances: &[Instance], mask: &[bool]) -> f64 {
        let mut parent = [0.0f64; 2];
        let mut left = [0.0f64; 2];
        for (inst, &in_left) in instances.iter().zip(mask) {
            parent[inst.label] += 1.0;
            if in_left {
                left[inst.label] += 1.0;
            }
        }
        let gini = |c: &[f64; 2]| {
            let n = c[0] + c[1];
            if n == 0.0 {
                return 0.0;
            }
            1.0 - (c[0] / n).powi(2) - (c[1] / n).powi(2)
        };
        let right = [parent[0] - left[0], parent[1] - left[1]];
        let n = parent[0] + parent[1];
        let (nl, nr) = (left[0] + left[1], right[0] + right[1]);
        if nl == 0.0 || nr == 0.0 {
            return 0.0;
        }
        gini(&parent) - nl / n * gini(&left) - nr / n * gini(&right)
    }

    /// Exhaustive best split over all midpoints between distinct sorted
    /// values and all nominal partitions.
    pub fn brute_force_best(schema: &Schema, instances: &[Instance]) -> (usize, Vec<bool>) {
        let mut best: Option<(usize, Vec<bool>, f64)> = None;
        for (attr, spec) in schema.attributes().iter().enumerate() {
            let masks: Vec<Vec<bool>> = if spec.kind.is_numeric() {
                let mut values: Vec<f64> = instances
                    .iter()
                    .map(|i| match i.values[attr] {
                        AttrValue::Numeric(x) => x,
                        _ => unreachable!(),
                    })
                    .collect();
                values.sort_by(|a, b| a.partial_cmp(b).unwrap());
                values.dedup();
                values
                    .windows(2)
                    .map(|w| {
                        let midpoint = (w[0] + w[1]) / 2.0;
                        instances
                            .iter()
                            .map(|i| match i.values[attr] {
                                AttrValue::Numeric(x) => x <= midpoint,
                                _ => unreachable!(),
                            })
                            .collect()
                    })
                    .collect()
            } else {
                let d = spec.kind.domain_size();
                (1u32..(1u32 << (d - 1)))
                    .map(|m| {
                        instances
                            .iter()
                            .map(|i| match i.values[attr] {
                                AttrValue::Nominal(v) => m >> v & 1 == 1,
                                _ => unreachable!(),
                            })
                            .collect()
                    })
                    .collect()
            };
            for mask in masks {
                let gain = exact_gain(instances, &mask);
                if best.as_ref().is_none_or(|(_, _, g)| gain > *g) {
                    best = Some((attr, mask, gain));
                }
            }
        }
        let (attr, mask, _) = best.expect("at least one partition exists");
        (attr, mask)
    }

    pub fn implementation_best(schema: &Schema, instances: &[Instance]) -> (usize, Vec<bool>) {
        let mut stats = LeafStats::new(schema, 32);
        for inst in instances {
            stats.update(inst).unwrap();
        }
        let cfg = SplitConfig {
            candidates: 2 * instances.len(),
            ..SplitConfig::default()
        };
        let (best, _) = best_two(&stats, &cfg).unwrap();
        let mask = instances
            .iter()
            .map(|inst| match (&best.test.kind, &inst.values[best.attribute]) {
                (SplitKind::Threshold(t), AttrValue::Numeric(x)) => x <= t,
                (SplitKind::Subset(s), AttrValue::Nominal(v)) => s.binary_search(v).is_ok(),
                _ => unreachable!(),
            })
            .collect();
        (best.attribute, mask)
    }

    pub fn masks_agree(a: &[bool], b: &[bool]) -> bool {
        a == b || a.iter().zip(b).all(|(x, y)| x != y)
    }
}

/// Criterion 6: on 50 seeded datasets with few distinct numeric values (so
/// the histograms are exact), the selected split matches brute-force
/// exhaustive search exactly, every time. Runtime < 10 s.
fn c06_split_oracle() -> CheckResult {
    let started = Instant::now();
    for seed in 0..50 {
        let (schema, instances) = oracle::dataset(seed);
        let (oracle_attr, oracle_mask) = oracle::brute_force_best(&schema, &instances);
        let (attr, mask) = oracle::implementation_best(&schema, &instances);
        check(
            attr == oracle_attr,
            format!("seed {seed}: attribute {attr} vs oracle {oracle_attr}"),
        )?;
        check(
            oracle::masks_agree(&mask, &oracle_mask),
            format!("seed {seed}: partition differs on attribute {attr}"),
        )?;
    }
    within_budget(started.elapsed(), 10)?;
    Ok("50/50 seeds match exhaustive search".into())
}

/// Criterion 7: bin budget, mass conservation, and the n/B cumulative-sum
/// tolerance against exact counts on retained samples, 100 seeds. < 10 s.
fn c07_histogram_properties() -> CheckResult {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let started = Instant::now();
    for seed in 0..100u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(100..=1000);
        let bins = if seed % 2 == 0 { 32 } else { 64 };
        let mut sample: Vec<f64> = (0..n)
            .map(|i| (i as f64 + rng.gen::<f64>()) / n as f64)
            .collect();
        sample.shuffle(&mut rng);
        let mut h = StreamingHistogram::new(bins);
        for &x in &sample {
            h.update(x).unwrap();
        }
        check(
            h.bins().len() <= bins,
            format!("seed {seed}: {} bins exceed budget {bins}", h.bins().len()),
        )?;
        check(
            (h.total() - n as f64).abs() < 1e-9,
            format!("seed {seed}: total {} != {n}", h.total()),
        )?;
        let mass: f64 = h.bins().iter().map(|b| b.count).sum();
        check(
            (mass - n as f64).abs() < 1e-6,
            format!("seed {seed}: bin mass {mass} != {n}"),
        )?;
        let bound = n as f64 / bins as f64;
        let mut sorted = sample.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &x in &sample {
            let exact = sorted.partition_point(|&y| y <= x) as f64;
            let err = (h.sum(x).unwrap() - exact).abs();
            check(
                err <= bound,
                format!("seed {seed}: sum error {err:.2} exceeds n/B = {bound:.2}"),
            )?;
        }
    }
    within_budget(started.elapsed(), 10)?;
    Ok("budget, mass and n/B tolerance hold across 100 seeds".into())
}

/// Criterion 8: the confidence bound is monotone in n and delta, and two
/// uninformative attributes essentially never split at delta = 1e-7.
fn c08_bound_behavior() -> CheckResult {
    use rand::{Rng, SeedableRng};
    for &delta in &[1e-7, 1e-4, 1e-2, 0.05] {
        let mut last = f64::INFINITY;
        for k in 1..=20 {
            let e = epsilon(1 << k, delta);
            check(
                e < last,
                format!("epsilon not decreasing in n at delta={delta}"),
            )?;
            last = e;
        }
    }
    for &n in &[100u64, 1000, 10_000] {
        let mut last = 0.0;
        for &delta in &[0.5, 0.05, 1e-4, 1e-7] {
            let e = epsilon(n, delta);
            check(
                e > last,
                format!("epsilon not increasing as delta shrinks at n={n}"),
            )?;
            last = e;
        }
    }
    check(epsilon(1000, 1.0) == 0.0, "epsilon(n, 1) must be 0".to_string())?;

    let schema = Arc::new(
        Schema::new(
            vec![AttributeSpec::numeric("a"), AttributeSpec::numeric("b")],
            vec!["p".into(), "q".into()],
        )
        .unwrap(),
    );
    let cfg = SplitConfig {
        delta: 1e-7,
        tau: 0.0,
        ..SplitConfig::default()
    };
    let mut splits = 0;
    for seed in 0..100u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut stats = LeafStats::new(&schema, 10);
        for _ in 0..10_000 {
            stats
                .update(&Instance {
                    values: vec![
                        AttrValue::Numeric(rng.gen()),
                        AttrValue::Numeric(rng.gen()),
                    ],
                    label: usize::from(rng.gen::<bool>()),
                })
                .unwrap();
        }
        let (best, second) = best_two(&stats, &cfg).map_err(|e| e.to_string())?;
        if matches!(
            decide_split(&best, second, 10_000, &cfg),
            SplitDecision::Split(_)
        ) {
            splits += 1;
        }
    }
    check(
        splits <= 5,
        format!("{splits}/100 noise-only runs split (allowed 5)"),
    )?;
    Ok(format!(
        "monotonicity grid holds; {splits}/100 noise runs split"
    ))
}

/// Criterion 9: the instrumented stream counter equals the record count for
/// full training runs, and a drained stream yields nothing afterwards.
fn c09_single_pass() -> CheckResult {
    // Synthetic stream.
    let cfg = GeneratorConfig {
        numeric_attrs: 4,
        nominal_attrs: 1,
        nominal_domain: 3,
        classes: 3,
        concept_depth: 4,
        noise: 0.1,
        seed: 9,
    };
    let (schema, concept) = generate_concept(&cfg).map_err(|e| e.to_string())?;
    let concept = Arc::new(concept);
    let mut source = CountingSource::new(generate_stream(&concept, &cfg, 20_000));
    let engine = EngineConfig {
        batch: 64,
        mappers: 3,
        ..EngineConfig::default()
    };
    let (_, reports) =
        train_stream(&mut source, &schema, &engine, None).map_err(|e| e.to_string())?;
    let consumed: u64 = reports.iter().map(|r| r.records).sum();
    check(
        source.yielded() == 20_000 && consumed == 20_000,
        format!("yielded {} / consumed {consumed}, expected 20000", source.yielded()),
    )?;
    let after = source.next_instance().map_err(|e| e.to_string())?;
    check(after.is_none(), "drained stream yielded another instance".to_string())?;

    // CSV stream.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let csv = dir.path().join("data.csv");
    let mut body = String::new();
    let mut gen = generate_stream(&concept, &cfg, 1_000);
    while let Some(inst) = gen.next_instance().map_err(|e| e.to_string())? {
        body.push_str(&streamcart::schema::format_instance(&inst, &schema));
        body.push('\n');
    }
    std::fs::write(&csv, body).map_err(|e| e.to_string())?;
    let mut source = CountingSource::new(
        open_csv_stream(&csv, schema.clone()).map_err(|e| e.to_string())?,
    );
    let (_, reports) =
        train_stream(&mut source, &schema, &engine, None).map_err(|e| e.to_string())?;
    let consumed: u64 = reports.iter().map(|r| r.records).sum();
    check(
        source.yielded() == 1_000 && consumed == 1_000,
        format!("CSV yielded {} / consumed {consumed}, expected 1000", source.yielded()),
    )?;
    let after = source.next_instance().map_err(|e| e.to_string())?;
    check(after.is_none(), "drained CSV stream yielded another instance".to_string())?;
    Ok("counters match exactly for synthetic and CSV runs; second reads are empty".into())
}

/// Criterion 10: with no noise and a depth-3 concept over 3 numeric
/// attributes, 500,000 records at delta = 1e-4 recover the concept to at
/// least 99% held-out accuracy.
fn c10_concept_recovery() -> CheckResult {
    let args = parse_train(&[
        "--attrs", "3", "--depth", "3", "--noise", "0",
        "--records", "500000", "--batch", "500",
        "--bins", "64", "--candidates", "64", "--delta", "1e-4", "--seed", "42",
    ]);
    let spec = streamcart_cli::source::SourceSpec::resolve(&args.stream, 42)
        .map_err(|e| e.to_string())?;
    let outcome = train::train_once(&spec, &args.engine.to_config(), None, false)
        .map_err(|e| e.to_string())?;
    let mut holdout = spec
        .holdout_source(20_000, 43)
        .map_err(|e| e.to_string())?;
    let accuracy = streamcart_cli::eval::evaluate(&outcome.tree, holdout.as_mut())
        .map_err(|e| e.to_string())?;
    check(
        accuracy.fraction() >= 0.99,
        format!("held-out accuracy {} below 99%", accuracy),
    )?;
    Ok(format!("held-out accuracy {accuracy}"))
}
