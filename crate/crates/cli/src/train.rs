//! The train command: one full pass over the stream, model and report files
//! on disk.

use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};

use streamcart::engine::train_stream_observed;
use streamcart::tree::{DecisionTree, TreeMetrics};
use streamcart::{EngineConfig, RoundReport};

use crate::eval::Accuracy;
use crate::opts::TrainArgs;
use crate::source::SourceSpec;
use crate::tsv;

pub struct TrainOutcome {
    pub tree: DecisionTree,
    pub reports: Vec<RoundReport>,
    pub metrics: TreeMetrics,
    pub elapsed: Duration,
    pub prequential: Option<Accuracy>,
    pub records: u64,
    pub split_evals: u64,
}

/// Trains over the spec's stream. When `out_dir` is set, per-round stats
/// files land inside it; the model and rounds TSV are the caller's concern.
pub fn train_once(
    spec: &SourceSpec,
    cfg: &EngineConfig,
    out_dir: Option<&Path>,
    prequential: bool,
) -> Result<TrainOutcome> {
    let mut source = spec.training_source()?;
    let started = Instant::now();
    let mut tally = Accuracy::default();
    let (tree, reports) = train_stream_observed(
        source.as_mut(),
        spec.schema(),
        cfg,
        out_dir,
        |snapshot, batch| {
            if prequential {
                for inst in batch {
                    let predicted = snapshot.predict(inst).expect("batch matches schema");
                    tally.record(predicted == inst.label);
                }
            }
        },
    )?;
    let elapsed = started.elapsed();
    let metrics = tree.metrics();
    let records = reports.iter().map(|r| r.records).sum();
    let split_evals = reports.iter().map(|r| r.evaluations).sum();
    Ok(TrainOutcome {
        tree,
        reports,
        metrics,
        elapsed,
        prequential: prequential.then_some(tally),
        records,
        split_evals,
    })
}

pub fn run(args: &TrainArgs) -> Result<TrainOutcome> {
    let spec = SourceSpec::resolve(&args.stream, args.engine.seed)?;
    let cfg = args.engine.to_config();
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let outcome = train_once(&spec, &cfg, Some(&args.out), args.prequential)?;
    std::fs::write(args.out.join("model.tree"), outcome.tree.serialize())?;
    tsv::write_rounds(&args.out.join("rounds.tsv"), &outcome.reports)?;
    println!(
        "trained {} records in {} rounds ({:.3}s): depth={} nodes={} leaves={}",
        outcome.records,
        outcome.reports.len(),
        outcome.elapsed.as_secs_f64(),
        outcome.metrics.depth,
        outcome.metrics.node_count,
        outcome.metrics.leaf_count,
    );
    if let Some(acc) = outcome.prequential {
        println!("prequential accuracy: {acc}");
    }
    println!("model: {}", args.out.join("model.tree").display());
    Ok(outcome)
}
