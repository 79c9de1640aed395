//! Sweep harness: rerun train + eval across one parameter axis with a shared
//! seed and report one row per point.

use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, Result};

use streamcart::tree::TreeMetrics;

use crate::eval::{evaluate, Accuracy};
use crate::opts::SweepArgs;
use crate::source::{SourceSpec, EVAL_SEED_OFFSET};
use crate::train::train_once;
use crate::tsv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Batch,
    Attrs,
    Bins,
}

impl FromStr for SweepAxis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch" => Ok(SweepAxis::Batch),
            "attrs" => Ok(SweepAxis::Attrs),
            "bins" => Ok(SweepAxis::Bins),
            other => bail!("unknown sweep axis `{other}` (expected batch, attrs or bins)"),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Batch => "batch",
            SweepAxis::Attrs => "attrs",
            SweepAxis::Bins => "bins",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: u64,
    pub accuracy: Accuracy,
    pub elapsed: Duration,
    pub split_evals: u64,
    pub metrics: TreeMetrics,
}

/// One train + eval per sweep value, sequentially so timings are
/// uncontended. Values are sorted ascending and deduplicated.
pub fn run_sweep(args: &SweepArgs) -> Result<(SweepAxis, Vec<SweepRow>)> {
    let axis: SweepAxis = args.axis.parse()?;
    let mut values = args.values.clone();
    values.sort_unstable();
    values.dedup();
    if values.is_empty() {
        bail!("sweep needs at least one value");
    }
    let eval_seed = args.eval_seed.unwrap_or(args.engine.seed.wrapping_add(EVAL_SEED_OFFSET));
    let mut rows = Vec::with_capacity(values.len());
    for &value in &values {
        let mut stream_args = args.stream.clone();
        let mut engine_args = args.engine.clone();
        match axis {
            SweepAxis::Batch => engine_args.batch = value.max(1),
            SweepAxis::Bins => engine_args.bins = value.max(2),
            SweepAxis::Attrs => {
                stream_args.attrs = value as usize;
                if stream_args.preset.is_some() {
                    bail!("the attrs axis sweeps a custom synthetic shape; drop --preset");
                }
            }
        }
        let spec = SourceSpec::resolve(&stream_args, engine_args.seed)?;
        let cfg = engine_args.to_config();
        cfg.validate()?;
        let outcome = train_once(&spec, &cfg, None, args.prequential)?;
        let accuracy = match outcome.prequential {
            Some(acc) => acc,
            None => {
                let mut holdout = spec.holdout_source(args.eval_records, eval_seed)?;
                evaluate(&outcome.tree, holdout.as_mut())?
            }
        };
        rows.push(SweepRow {
            value,
            accuracy,
            elapsed: outcome.elapsed,
            split_evals: outcome.split_evals,
            metrics: outcome.metrics,
        });
    }
    Ok((axis, rows))
}

pub fn run(args: &SweepArgs) -> Result<(SweepAxis, Vec<SweepRow>)> {
    let (axis, rows) = run_sweep(args)?;
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join("sweep.tsv");
    tsv::write_sweep(&path, axis.name(), &rows)?;
    println!("{}\tvalue\taccuracy\telapsed_s\tsplit_evals\tdepth/nodes/leaves", axis.name());
    for row in &rows {
        println!(
            "{}\t{}\t{}\t{:.3}\t{}\t{}/{}/{}",
            axis.name(),
            row.value,
            row.accuracy,
            row.elapsed.as_secs_f64(),
            row.split_evals,
            row.metrics.depth,
            row.metrics.node_count,
            row.metrics.leaf_count,
        );
    }
    println!("report: {}", path.display());
    Ok((axis, rows))
}
