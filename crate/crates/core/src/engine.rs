//! The round-based training loop.
//!
//! Each round the controller reads up to `G` records from the stream,
//! partitions them contiguously across `P` mappers, and hands every mapper
//! the same immutable tree snapshot. Mappers route their shard and build
//! leaf statistics locally; the reducer folds the local statistics into the
//! persistent global statistics in ascending mapper order and materializes
//! them to a `round-<i>.stats` file; the controller then evaluates every
//! leaf in ascending leaf id order and applies the splits that pass the
//! confidence rule. Mapper state is cleared at the end of every round, and
//! the stream is consumed exactly once.
//!
//! Mapper-local histograms are kept exact for the duration of a round (their
//! bin budget is the round size, which no shard can exceed) and are
//! compacted to the configured `B`-bin budget once, when they fold into the
//! global statistics. The folded result is therefore a function of the
//! round's record sequence alone: the final tree, the split log, and every
//! stats file are identical for any mapper count and any scheduling order.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::histogram::{HistogramError, NominalCounts, StreamingHistogram};
use crate::schema::{Instance, Schema, SharedSchema};
use crate::split::{
    best_two, decide_split, AttributeStats, LeafStats, SplitConfig, SplitDecision, SplitError,
};
use crate::stream::{StreamError, StreamSource};
use crate::tree::{DecisionTree, LeafId, SplitTest, TreeError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid engine config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Histogram(#[from] HistogramError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("stats file line {line}: {msg}")]
    StatsParse { line: usize, msg: String },
}

/// Round structure: mapper count, records per round, histogram bin budget,
/// split parameters, and the stream seed recorded for reproducibility.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub mappers: usize,
    pub batch: usize,
    pub bins: usize,
    pub split: SplitConfig,
    pub seed: u64,
    pub max_rounds: Option<u64>,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.mappers < 1 {
            return Err(EngineError::InvalidConfig("mappers must be >= 1".into()));
        }
        if self.batch < 1 {
            return Err(EngineError::InvalidConfig(
                "records per round must be >= 1".into(),
            ));
        }
        if self.bins < 2 {
            return Err(EngineError::InvalidConfig("bin budget must be >= 2".into()));
        }
        Ok(())
    }
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            mappers: 4,
            batch: 200,
            bins: 10,
            split: SplitConfig::default(),
            seed: 0,
            max_rounds: None,
        }
    }
}

/// One mapper's statistics for the current round, keyed by leaf. Covers
/// exactly the leaves that received records and is cleared when the round's
/// reduce drains it.
#[derive(Debug)]
pub struct MapperState {
    pub mapper_index: usize,
    pub stats: BTreeMap<LeafId, LeafStats>,
}

impl MapperState {
    pub fn new(mapper_index: usize) -> Self {
        MapperState {
            mapper_index,
            stats: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }
}

/// Per-leaf statistics accumulated across rounds; a leaf's entry persists
/// until the leaf splits, and split leaves never reappear.
#[derive(Debug, Default)]
pub struct GlobalStats {
    stats: BTreeMap<LeafId, LeafStats>,
}

impl GlobalStats {
    pub fn new() -> Self {
        GlobalStats::default()
    }

    pub fn leaf_count(&self) -> usize {
        self.stats.len()
    }

    pub fn get(&self, leaf: LeafId) -> Option<&LeafStats> {
        self.stats.get(&leaf)
    }

    pub fn iter(&self) -> impl Iterator<Item = (LeafId, &LeafStats)> {
        self.stats.iter().map(|(id, s)| (*id, s))
    }

    pub fn remove(&mut self, leaf: LeafId) -> Option<LeafStats> {
        self.stats.remove(&leaf)
    }

    pub fn insert(&mut self, leaf: LeafId, stats: LeafStats) {
        self.stats.insert(leaf, stats);
    }
}

/// Instrumentation for one round.
#[derive(Debug, Clone)]
pub struct RoundReport {
    pub round: u64,
    pub records: u64,
    pub splits: u64,
    /// Leaves whose candidates were fully evaluated this round.
    pub evaluations: u64,
    pub elapsed: Duration,
    pub map_elapsed: Duration,
    pub reduce_elapsed: Duration,
    pub decide_elapsed: Duration,
}

/// Contiguous shards in batch order: the first `len % mappers` shards carry
/// one extra record; surplus mappers receive empty shards.
pub fn partition_round(batch: &[Instance], mappers: usize) -> Vec<&[Instance]> {
    assert!(mappers >= 1);
    shard_ranges(batch.len(), mappers)
        .into_iter()
        .map(|r| &batch[r])
        .collect()
}

/// Routes every instance in the shard through the tree snapshot and records
/// it in that leaf's local statistics. `bins` is the bin budget for the
/// mapper-local numeric histograms.
pub fn map_shard(
    tree: &DecisionTree,
    shard: &[Instance],
    bins: usize,
    mapper_index: usize,
) -> Result<MapperState, EngineError> {
    let mut state = MapperState::new(mapper_index);
    let schema = tree.schema();
    for inst in shard {
        let leaf = tree.route(inst)?;
        let stats = state
            .stats
            .entry(leaf)
            .or_insert_with(|| LeafStats::new(schema, bins));
        stats.update(inst)?;
    }
    Ok(state)
}

/// Folds the mappers' local statistics into the global statistics.
///
/// Per leaf, the locals are combined in ascending mapper index order (the
/// canonical fold that makes the reduce independent of scheduling) and the
/// combined round statistics are then absorbed into the global entry with
/// histograms compacted to the global `bins` budget. Every local map is
/// drained in the process.
pub fn reduce(
    locals: &mut [MapperState],
    global: &mut GlobalStats,
    bins: usize,
) -> Result<(), EngineError> {
    let leaf_ids: Vec<LeafId> = {
        let mut ids: Vec<LeafId> = locals
            .iter()
            .flat_map(|m| m.stats.keys().copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    };
    for leaf in leaf_ids {
        let mut combined: Option<LeafStats> = None;
        for local in locals.iter_mut() {
            if let Some(stats) = local.stats.remove(&leaf) {
                match &mut combined {
                    None => combined = Some(stats),
                    Some(acc) => acc.merge(&stats)?,
                }
            }
        }
        let combined = combined.expect("leaf came from a local map");
        match global.stats.get_mut(&leaf) {
            Some(entry) => entry.absorb(&combined, bins)?,
            None => {
                global.stats.insert(leaf, combined.compact(bins));
            }
        }
    }
    Ok(())
}

fn render_f64(x: f64) -> String {
    format!("{x}")
}

/// Writes global statistics as line-oriented text: a `STATS <leaf-count>`
/// header, then per leaf a `LEAF` line followed by one `HIST`/`NOM` line per
/// (attribute, class), sorted by (leaf, attribute, class). Reals use
/// shortest round-trip decimals, so rereading is bit-exact.
pub fn write_reduce_output(global: &GlobalStats, path: &Path) -> Result<(), EngineError> {
    let mut out = String::new();
    out.push_str(&format!("STATS {}\n", global.stats.len()));
    for (leaf, stats) in &global.stats {
        let counts: Vec<String> = stats.class_counts.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!(
            "LEAF {} N {} CLASSES {}\n",
            leaf,
            stats.n(),
            counts.join(",")
        ));
        for (attr, attr_stats) in stats.attributes.iter().enumerate() {
            match attr_stats {
                AttributeStats::Numeric(hists) => {
                    for (class, hist) in hists.iter().enumerate() {
                        let bins: Vec<String> = hist
                            .bins()
                            .iter()
                            .map(|b| format!("{}:{}", render_f64(b.centroid), render_f64(b.count)))
                            .collect();
                        if bins.is_empty() {
                            out.push_str(&format!("HIST {leaf} {attr} {class}\n"));
                        } else {
                            out.push_str(&format!(
                                "HIST {leaf} {attr} {class} {}\n",
                                bins.join(";")
                            ));
                        }
                    }
                }
                AttributeStats::Nominal(tables) => {
                    for (class, table) in tables.iter().enumerate() {
                        let counts: Vec<String> =
                            table.counts().iter().map(|c| c.to_string()).collect();
                        out.push_str(&format!(
                            "NOM {leaf} {attr} {class} {}\n",
                            counts.join(",")
                        ));
                    }
                }
            }
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Reads a stats file back; `read(write(g))` reproduces `g` with bitwise
/// equal reals. The schema and bin budget shape the reconstruction.
pub fn read_reduce_output(
    path: &Path,
    schema: &Schema,
    bins: usize,
) -> Result<GlobalStats, EngineError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, msg: String| EngineError::StatsParse { line: line + 1, msg };

    let (first_no, first) = lines
        .next()
        .ok_or_else(|| bad(0, "missing STATS header".into()))?;
    let declared: usize = first
        .strip_prefix("STATS ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| bad(first_no, format!("bad header `{first}`")))?;

    let mut global = GlobalStats::new();
    let mut current: Option<(LeafId, LeafStats)> = None;
    for (no, line) in lines {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("LEAF") => {
                if let Some((leaf, stats)) = current.take() {
                    global.stats.insert(leaf, stats);
                }
                let id: u64 = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(no, "bad leaf id".into()))?;
                if parts.next() != Some("N") {
                    return Err(bad(no, "expected N".into()));
                }
                let n: u64 = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(no, "bad instance count".into()))?;
                if parts.next() != Some("CLASSES") {
                    return Err(bad(no, "expected CLASSES".into()));
                }
                let counts_text = parts.next().ok_or_else(|| bad(no, "missing counts".into()))?;
                let mut stats = LeafStats::new(schema, bins);
                let counts: Vec<u64> = counts_text
                    .split(',')
                    .map(|c| c.parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad(no, "bad class counts".into()))?;
                if counts.len() != schema.class_count() {
                    return Err(bad(no, "class count mismatch with schema".into()));
                }
                stats.class_counts = counts;
                if stats.n() != n {
                    return Err(bad(no, "N disagrees with class counts".into()));
                }
                current = Some((LeafId(id), stats));
            }
            Some(kind @ ("HIST" | "NOM")) => {
                let (leaf, stats) = current
                    .as_mut()
                    .ok_or_else(|| bad(no, "distribution line before any LEAF".into()))?;
                let id: u64 = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(no, "bad leaf id".into()))?;
                if id != leaf.0 {
                    return Err(bad(no, "leaf id differs from the current LEAF".into()));
                }
                let attr: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(no, "bad attribute index".into()))?;
                let class: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(no, "bad class index".into()))?;
                if attr >= schema.attribute_count() || class >= schema.class_count() {
                    return Err(bad(no, "attribute or class out of range".into()));
                }
                let payload = parts.next().unwrap_or("");
                let expect_numeric = schema.attributes()[attr].kind.is_numeric();
                match (kind, expect_numeric, &mut stats.attributes[attr]) {
                    ("HIST", true, AttributeStats::Numeric(hists)) => {
                        hists[class] = StreamingHistogram::parse_bins(payload, bins)
                            .map_err(|e| bad(no, e.to_string()))?;
                    }
                    ("NOM", false, AttributeStats::Nominal(tables)) => {
                        let counts: Vec<u64> = payload
                            .split(',')
                            .map(|c| c.parse())
                            .collect::<Result<_, _>>()
                            .map_err(|_| bad(no, "bad nominal counts".into()))?;
                        if counts.len() != schema.attributes()[attr].kind.domain_size() {
                            return Err(bad(no, "domain size mismatch".into()));
                        }
                        tables[class] = NominalCounts::from_counts(counts);
                    }
                    _ => return Err(bad(no, "line kind does not match the schema".into())),
                }
            }
            Some(other) => return Err(bad(no, format!("unknown line kind `{other}`"))),
            None => continue,
        }
    }
    if let Some((leaf, stats)) = current.take() {
        global.stats.insert(leaf, stats);
    }
    if global.stats.len() != declared {
        return Err(EngineError::StatsParse {
            line: 1,
            msg: format!(
                "header declares {declared} leaves, found {}",
                global.stats.len()
            ),
        });
    }
    Ok(global)
}

/// What one controller pass did.
#[derive(Debug, Clone, Default)]
pub struct StepOutcome {
    /// Splits applied, in ascending leaf id order.
    pub splits: Vec<(LeafId, SplitTest)>,
    /// Leaves whose candidates were fully evaluated.
    pub evaluations: u64,
}

fn majority_class(counts: &[u64]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

/// Visits leaves in ascending leaf id order; refreshes each leaf's
/// prediction summary from the merged statistics, evaluates its candidates
/// once the instance floor is reached, and applies the splits that pass the
/// confidence rule. A split discards that leaf's global statistics — the
/// fresh children start empty.
pub fn controller_step(
    tree: &mut DecisionTree,
    global: &mut GlobalStats,
    cfg: &SplitConfig,
) -> Result<StepOutcome, EngineError> {
    let mut outcome = StepOutcome::default();
    let leaf_ids: Vec<LeafId> = global.stats.keys().copied().collect();
    for leaf in leaf_ids {
        let stats = &global.stats[&leaf];
        let n = stats.n();
        if n == 0 {
            continue;
        }
        tree.set_leaf_summary(leaf, majority_class(&stats.class_counts), n)?;
        if n < cfg.min_instances {
            continue;
        }
        outcome.evaluations += 1;
        let (best, second_gain) = match best_two(stats, cfg) {
            Ok(pair) => pair,
            Err(SplitError::NoCandidates) => continue,
            Err(e) => return Err(e.into()),
        };
        if let SplitDecision::Split(test) = decide_split(&best, second_gain, n, cfg) {
            tree.apply_split(leaf, test.clone())?;
            global.stats.remove(&leaf);
            outcome.splits.push((leaf, test));
        }
    }
    Ok(outcome)
}

fn read_batch(
    source: &mut dyn StreamSource,
    batch: &mut Vec<Instance>,
    limit: usize,
) -> Result<(), EngineError> {
    batch.clear();
    while batch.len() < limit {
        match source.next_instance()? {
            Some(inst) => batch.push(inst),
            None => break,
        }
    }
    Ok(())
}

struct MapJob {
    tree: Arc<DecisionTree>,
    batch: Arc<Vec<Instance>>,
    range: std::ops::Range<usize>,
    bins: usize,
    mapper_index: usize,
}

/// Long-lived mapper workers fed one shard per round. The controller keeps
/// the first shard for itself; workers exit when the pool drops. Results are
/// collected in mapper order, so scheduling cannot influence the fold.
struct MapperPool {
    job_senders: Vec<mpsc::Sender<MapJob>>,
    result_receivers: Vec<mpsc::Receiver<Result<MapperState, EngineError>>>,
    handles: Vec<std::thread::JoinHandle<()>>,
}

impl MapperPool {
    fn new(workers: usize) -> Self {
        let mut job_senders = Vec::with_capacity(workers);
        let mut result_receivers = Vec::with_capacity(workers);
        let mut handles = Vec::with_capacity(workers);
        for _ in 0..workers {
            let (job_tx, job_rx) = mpsc::channel::<MapJob>();
            let (result_tx, result_rx) = mpsc::channel();
            handles.push(std::thread::spawn(move || {
                while let Ok(job) = job_rx.recv() {
                    let state = map_shard(
                        &job.tree,
                        &job.batch[job.range.clone()],
                        job.bins,
                        job.mapper_index,
                    );
                    // Release the shared batch before signaling completion
                    // so the controller can reclaim its allocation.
                    drop(job);
                    if result_tx.send(state).is_err() {
                        break;
                    }
                }
            }));
            job_senders.push(job_tx);
            result_receivers.push(result_rx);
        }
        MapperPool {
            job_senders,
            result_receivers,
            handles,
        }
    }

    /// Maps one round: shard 0 runs on the calling thread, shards 1..P on
    /// the workers; empty shards never cross a channel.
    fn map_round(
        &self,
        tree: &Arc<DecisionTree>,
        batch: &Arc<Vec<Instance>>,
        shard_ranges: &[std::ops::Range<usize>],
        bins: usize,
    ) -> Result<Vec<MapperState>, EngineError> {
        let mut pending = vec![false; shard_ranges.len()];
        for (i, range) in shard_ranges.iter().enumerate().skip(1) {
            if range.is_empty() {
                continue;
            }
            self.job_senders[i - 1]
                .send(MapJob {
                    tree: tree.clone(),
                    batch: batch.clone(),
                    range: range.clone(),
                    bins,
                    mapper_index: i,
                })
                .expect("mapper worker is alive");
            pending[i] = true;
        }
        let mut states = Vec::with_capacity(shard_ranges.len());
        states.push(map_shard(tree, &batch[shard_ranges[0].clone()], bins, 0)?);
        let mut first_error = None;
        for (i, range) in shard_ranges.iter().enumerate().skip(1) {
            let state = if pending[i] {
                match self.result_receivers[i - 1]
                    .recv()
                    .expect("mapper worker is alive")
                {
                    Ok(state) => state,
                    Err(e) => {
                        first_error.get_or_insert(e);
                        MapperState::new(i)
                    }
                }
            } else {
                debug_assert!(range.is_empty());
                MapperState::new(i)
            };
            states.push(state);
        }
        match first_error {
            Some(e) => Err(e),
            None => Ok(states),
        }
    }
}

impl Drop for MapperPool {
    fn drop(&mut self) {
        self.job_senders.clear();
        for handle in self.handles.drain(..) {
            let _ = handle.join();
        }
    }
}

fn shard_ranges(len: usize, mappers: usize) -> Vec<std::ops::Range<usize>> {
    let base = len / mappers;
    let extra = len % mappers;
    let mut ranges = Vec::with_capacity(mappers);
    let mut start = 0;
    for i in 0..mappers {
        let size = base + usize::from(i < extra);
        ranges.push(start..start + size);
        start += size;
    }
    ranges
}

/// Trains over the whole stream in rounds of up to `cfg.batch` records,
/// invoking `observer` with the pre-round tree snapshot and the round's
/// batch before any training happens (the hook behind test-then-train
/// evaluation). When `out_dir` is given, each round's merged statistics are
/// written to `round-<i>.stats` inside it.
pub fn train_stream_observed<F>(
    source: &mut dyn StreamSource,
    schema: &SharedSchema,
    cfg: &EngineConfig,
    out_dir: Option<&Path>,
    mut observer: F,
) -> Result<(DecisionTree, Vec<RoundReport>), EngineError>
where
    F: FnMut(&DecisionTree, &[Instance]),
{
    cfg.validate()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }
    let mut tree = DecisionTree::new(schema.clone());
    let mut global = GlobalStats::new();
    let mut reports = Vec::new();
    let mut batch: Vec<Instance> = Vec::with_capacity(cfg.batch.min(1 << 16));
    let pool = (cfg.mappers > 1).then(|| MapperPool::new(cfg.mappers - 1));
    let mut round: u64 = 0;
    loop {
        if cfg.max_rounds.is_some_and(|limit| round >= limit) {
            break;
        }
        read_batch(source, &mut batch, cfg.batch)?;
        if batch.is_empty() {
            break;
        }
        observer(&tree, &batch);
        let records = batch.len() as u64;
        let round_start = Instant::now();

        // Mapper-local histograms stay exact within the round: no shard can
        // hold more distinct values than the batch carries records.
        let local_bins = batch.len();
        let map_start = Instant::now();
        let ranges = shard_ranges(batch.len(), cfg.mappers);
        let workers_needed = ranges.iter().skip(1).any(|r| !r.is_empty());
        let mut locals = match (&pool, workers_needed) {
            (Some(pool), true) => {
                let tree_snapshot = Arc::new(tree.clone());
                let shared_batch = Arc::new(std::mem::take(&mut batch));
                let locals = pool.map_round(&tree_snapshot, &shared_batch, &ranges, local_bins);
                batch = Arc::try_unwrap(shared_batch).unwrap_or_default();
                locals?
            }
            _ => ranges
                .iter()
                .enumerate()
                .map(|(i, r)| map_shard(&tree, &batch[r.clone()], local_bins, i))
                .collect::<Result<Vec<_>, _>>()?,
        };
        let map_elapsed = map_start.elapsed();

        let reduce_start = Instant::now();
        reduce(&mut locals, &mut global, cfg.bins)?;
        debug_assert!(locals.iter().all(MapperState::is_empty));
        if let Some(dir) = out_dir {
            write_reduce_output(&global, &dir.join(format!("round-{round}.stats")))?;
        }
        let reduce_elapsed = reduce_start.elapsed();

        let decide_start = Instant::now();
        let outcome = controller_step(&mut tree, &mut global, &cfg.split)?;
        let decide_elapsed = decide_start.elapsed();

        reports.push(RoundReport {
            round,
            records,
            splits: outcome.splits.len() as u64,
            evaluations: outcome.evaluations,
            elapsed: round_start.elapsed(),
            map_elapsed,
            reduce_elapsed,
            decide_elapsed,
        });
        round += 1;
    }
    Ok((tree, reports))
}

/// [`train_stream_observed`] without an observer.
pub fn train_stream(
    source: &mut dyn StreamSource,
    schema: &SharedSchema,
    cfg: &EngineConfig,
    out_dir: Option<&Path>,
) -> Result<(DecisionTree, Vec<RoundReport>), EngineError> {
    train_stream_observed(source, schema, cfg, out_dir, |_, _| {})
}
