//! Gini-based split evaluation over per-leaf statistics.
//!
//! For each leaf the learner tracks class counts plus one distribution per
//! (attribute, class) pair: a [`StreamingHistogram`] for numeric attributes,
//! a [`NominalCounts`] table for nominal ones. Candidate splits are scored
//! by Gini gain; the best feature splits once it beats the second-best
//! feature by more than the Hoeffding bound `epsilon(n, delta)`, or when the
//! bound has shrunk below the tie threshold `tau`.

use thiserror::Error;

use crate::histogram::{HistogramError, NominalCounts, StreamingHistogram};
use crate::schema::{AttrValue, AttributeKind, Instance, Schema};
use crate::tree::{SplitKind, SplitTest};

/// Elementwise slack allowed between `left + right` and `parent` when gains
/// are computed from interpolated counts.
const COUNT_CONSISTENCY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("class counts are all zero")]
    EmptyCounts,
    #[error("left + right differs from parent counts by {0} at class {1}")]
    InconsistentCounts(f64, usize),
    #[error("no attribute yields a candidate split")]
    NoCandidates,
    #[error("leaf statistics are empty")]
    EmptyStats,
    #[error(transparent)]
    Histogram(#[from] HistogramError),
}

/// Split-decision parameters.
#[derive(Debug, Clone)]
pub struct SplitConfig {
    /// Confidence parameter of the Hoeffding bound.
    pub delta: f64,
    /// Tie threshold: once `epsilon < tau` the top candidate splits even if
    /// it does not beat the runner-up feature.
    pub tau: f64,
    /// Minimum instances at a leaf before any evaluation.
    pub min_instances: u64,
    /// Number of uniform-mass intervals when proposing numeric thresholds;
    /// yields at most `candidates - 1` thresholds per attribute.
    pub candidates: usize,
    /// Largest nominal domain that still gets exhaustive binary partitions;
    /// larger domains fall back to one-vs-rest.
    pub nominal_cap: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            delta: 1e-4,
            tau: 0.05,
            min_instances: 200,
            candidates: 10,
            nominal_cap: 12,
        }
    }
}

/// A scored candidate: the test plus its estimated Gini gain.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSplit {
    pub attribute: usize,
    pub test: SplitTest,
    pub gain: f64,
}

/// Outcome of a split evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitDecision {
    Split(SplitTest),
    Defer,
}

/// Pluggable confidence bound, so a different split certificate can replace
/// the default without touching callers.
pub trait ConfidenceBound {
    /// Half-width of the confidence interval after `n` observations.
    fn epsilon(&self, n: u64, delta: f64) -> f64;
}

/// Hoeffding bound with range 1: `sqrt(ln(1/delta) / (2n))`.
pub struct HoeffdingBound;

impl ConfidenceBound for HoeffdingBound {
    fn epsilon(&self, n: u64, delta: f64) -> f64 {
        ((1.0 / delta).ln() / (2.0 * n as f64)).sqrt()
    }
}

/// `sqrt(ln(1/delta) / (2n))`, the default bound.
pub fn epsilon(n: u64, delta: f64) -> f64 {
    HoeffdingBound.epsilon(n, delta)
}

/// Gini impurity `1 - sum_k (c_k / n)^2`; in `[0, 1 - 1/K]`.
pub fn gini(counts: &[f64]) -> Result<f64, SplitError> {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(SplitError::EmptyCounts);
    }
    let sum_sq: f64 = counts
        .iter()
        .map(|&c| {
            let p = c / total;
            p * p
        })
        .sum();
    Ok(1.0 - sum_sq)
}

/// Impurity reduction of a binary partition:
/// `gini(parent) - (nL/n) gini(left) - (nR/n) gini(right)`.
/// An empty side yields gain 0.
pub fn gini_gain(parent: &[f64], left: &[f64], right: &[f64]) -> Result<f64, SplitError> {
    for (k, ((p, l), r)) in parent.iter().zip(left).zip(right).enumerate() {
        let diff = (l + r - p).abs();
        if diff > COUNT_CONSISTENCY_TOLERANCE {
            return Err(SplitError::InconsistentCounts(diff, k));
        }
    }
    let n: f64 = parent.iter().sum();
    if n <= 0.0 {
        return Err(SplitError::EmptyCounts);
    }
    let n_left: f64 = left.iter().sum();
    let n_right: f64 = right.iter().sum();
    if n_left <= 0.0 || n_right <= 0.0 {
        return Ok(0.0);
    }
    Ok(gini(parent)? - n_left / n * gini(left)? - n_right / n * gini(right)?)
}

/// Per-attribute distributions for one leaf, one entry per class.
#[derive(Debug, Clone)]
pub enum AttributeStats {
    Numeric(Vec<StreamingHistogram>),
    Nominal(Vec<NominalCounts>),
}

/// Per-leaf sufficient statistics: class counts plus per-(attribute, class)
/// distributions. A leaf's statistics are exclusively owned by one worker at
/// a time; cross-worker combination goes through [`LeafStats::merge`].
#[derive(Debug, Clone)]
pub struct LeafStats {
    pub class_counts: Vec<u64>,
    pub attributes: Vec<AttributeStats>,
}

impl LeafStats {
    /// Empty statistics shaped by the schema, with the given histogram bin
    /// budget for numeric attributes.
    pub fn new(schema: &Schema, bins: usize) -> Self {
        let classes = schema.class_count();
        let attributes = schema
            .attributes()
            .iter()
            .map(|attr| match &attr.kind {
                AttributeKind::Numeric => AttributeStats::Numeric(
                    (0..classes).map(|_| StreamingHistogram::new(bins)).collect(),
                ),
                AttributeKind::Nominal { domain } => AttributeStats::Nominal(
                    (0..classes).map(|_| NominalCounts::new(domain.len())).collect(),
                ),
            })
            .collect();
        LeafStats {
            class_counts: vec![0; classes],
            attributes,
        }
    }

    /// Total instances recorded.
    pub fn n(&self) -> u64 {
        self.class_counts.iter().sum()
    }

    /// Records one instance: bumps its class count and every attribute's
    /// (attribute, class) distribution.
    pub fn update(&mut self, inst: &Instance) -> Result<(), HistogramError> {
        let k = inst.label;
        self.class_counts[k] += 1;
        for (stats, value) in self.attributes.iter_mut().zip(&inst.values) {
            match (stats, value) {
                (AttributeStats::Numeric(hists), AttrValue::Numeric(x)) => {
                    hists[k].update(*x)?;
                }
                (AttributeStats::Nominal(tables), AttrValue::Nominal(v)) => {
                    tables[k].update(*v)?;
                }
                (AttributeStats::Numeric(_), AttrValue::Nominal(v)) => {
                    return Err(HistogramError::NonFinite(*v as f64));
                }
                (AttributeStats::Nominal(tables), AttrValue::Numeric(_)) => {
                    return Err(HistogramError::IndexOutOfRange {
                        index: usize::MAX,
                        domain: tables.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Adds `other` into `self`: class counts add, histograms merge, nominal
    /// tables add. Histogram budgets must match.
    pub fn merge(&mut self, other: &LeafStats) -> Result<(), HistogramError> {
        for (c, o) in self.class_counts.iter_mut().zip(&other.class_counts) {
            *c += o;
        }
        for (mine, theirs) in self.attributes.iter_mut().zip(&other.attributes) {
            match (mine, theirs) {
                (AttributeStats::Numeric(a), AttributeStats::Numeric(b)) => {
                    for (h, o) in a.iter_mut().zip(b) {
                        h.merge(o)?;
                    }
                }
                (AttributeStats::Nominal(a), AttributeStats::Nominal(b)) => {
                    for (t, o) in a.iter_mut().zip(b) {
                        t.add(o)?;
                    }
                }
                _ => {
                    return Err(HistogramError::IndexOutOfRange {
                        index: usize::MAX,
                        domain: 0,
                    })
                }
            }
        }
        Ok(())
    }

    /// Adds `other` into `self`, first compacting `other`'s histograms to
    /// `self`'s bin budget. Used when folding exact round-local statistics
    /// into the bounded global statistics.
    pub fn absorb(&mut self, other: &LeafStats, bins: usize) -> Result<(), HistogramError> {
        for (c, o) in self.class_counts.iter_mut().zip(&other.class_counts) {
            *c += o;
        }
        for (mine, theirs) in self.attributes.iter_mut().zip(&other.attributes) {
            match (mine, theirs) {
                (AttributeStats::Numeric(a), AttributeStats::Numeric(b)) => {
                    for (h, o) in a.iter_mut().zip(b) {
                        h.merge(&o.with_max_bins(bins))?;
                    }
                }
                (AttributeStats::Nominal(a), AttributeStats::Nominal(b)) => {
                    for (t, o) in a.iter_mut().zip(b) {
                        t.add(o)?;
                    }
                }
                _ => {
                    return Err(HistogramError::IndexOutOfRange {
                        index: usize::MAX,
                        domain: 0,
                    })
                }
            }
        }
        Ok(())
    }

    /// A copy whose numeric histograms are collapsed to the given budget.
    pub fn compact(&self, bins: usize) -> LeafStats {
        LeafStats {
            class_counts: self.class_counts.clone(),
            attributes: self
                .attributes
                .iter()
                .map(|a| match a {
                    AttributeStats::Numeric(hists) => AttributeStats::Numeric(
                        hists.iter().map(|h| h.with_max_bins(bins)).collect(),
                    ),
                    AttributeStats::Nominal(tables) => AttributeStats::Nominal(tables.clone()),
                })
                .collect(),
        }
    }
}

/// Orders candidates of equal gain: lower threshold first, then
/// lexicographically smaller subset.
fn test_precedes(a: &SplitTest, b: &SplitTest) -> bool {
    match (&a.kind, &b.kind) {
        (SplitKind::Threshold(x), SplitKind::Threshold(y)) => x < y,
        (SplitKind::Subset(x), SplitKind::Subset(y)) => x < y,
        // Mixed kinds cannot occur within one attribute.
        (SplitKind::Threshold(_), SplitKind::Subset(_)) => true,
        (SplitKind::Subset(_), SplitKind::Threshold(_)) => false,
    }
}

fn better_candidate(a: &CandidateSplit, b: &CandidateSplit) -> bool {
    if a.gain != b.gain {
        return a.gain > b.gain;
    }
    if a.attribute != b.attribute {
        return a.attribute < b.attribute;
    }
    test_precedes(&a.test, &b.test)
}

/// All candidate splits for one attribute.
///
/// Numeric: thresholds come from inverting the class-summed histogram's
/// cumulative mass at uniform targets; per-side class counts are estimated
/// with interpolated sums and clamped to `[0, class_count]`. Nominal with
/// domain `d <= nominal_cap`: all `2^(d-1) - 1` binary partitions; larger
/// domains get one-vs-rest partitions only.
pub fn enumerate_candidates(
    stats: &LeafStats,
    attribute: usize,
    cfg: &SplitConfig,
) -> Result<Vec<CandidateSplit>, SplitError> {
    let n = stats.n();
    if n == 0 {
        return Err(SplitError::EmptyStats);
    }
    let parent: Vec<f64> = stats.class_counts.iter().map(|&c| c as f64).collect();
    let mut candidates = Vec::new();
    match &stats.attributes[attribute] {
        AttributeStats::Numeric(hists) => {
            let mut merged = StreamingHistogram::new(hists[0].max_bins());
            for h in hists {
                merged.merge(h)?;
            }
            if merged.is_empty() {
                return Ok(candidates);
            }
            for threshold in merged.uniform(cfg.candidates)? {
                let mut left = Vec::with_capacity(parent.len());
                let mut right = Vec::with_capacity(parent.len());
                for (k, hist) in hists.iter().enumerate() {
                    let count = parent[k];
                    let l = if count == 0.0 || hist.is_empty() {
                        0.0
                    } else {
                        hist.sum(threshold)?.clamp(0.0, count)
                    };
                    left.push(l);
                    right.push(count - l);
                }
                push_candidate(
                    &mut candidates,
                    &parent,
                    left,
                    right,
                    SplitTest::threshold(attribute, threshold),
                )?;
            }
        }
        AttributeStats::Nominal(tables) => {
            let domain = tables[0].domain_size();
            if domain < 2 {
                return Ok(candidates);
            }
            let subsets: Vec<Vec<usize>> = if domain <= cfg.nominal_cap {
                // Each binary partition exactly once: the subset ranges over
                // nonempty sets of the first d-1 values.
                (1u64..(1u64 << (domain - 1)))
                    .map(|mask| (0..domain - 1).filter(|v| mask >> v & 1 == 1).collect())
                    .collect()
            } else {
                (0..domain).map(|v| vec![v]).collect()
            };
            for subset in subsets {
                let mut left = Vec::with_capacity(parent.len());
                let mut right = Vec::with_capacity(parent.len());
                for (k, table) in tables.iter().enumerate() {
                    let l: u64 = subset.iter().map(|&v| table.counts()[v]).sum();
                    left.push(l as f64);
                    right.push(parent[k] - l as f64);
                }
                push_candidate(
                    &mut candidates,
                    &parent,
                    left,
                    right,
                    SplitTest::subset(attribute, subset),
                )?;
            }
        }
    }
    Ok(candidates)
}

fn push_candidate(
    candidates: &mut Vec<CandidateSplit>,
    parent: &[f64],
    left: Vec<f64>,
    right: Vec<f64>,
    test: SplitTest,
) -> Result<(), SplitError> {
    let n_left: f64 = left.iter().sum();
    let n_right: f64 = right.iter().sum();
    if n_left <= 0.0 && n_right <= 0.0 {
        return Ok(());
    }
    let gain = gini_gain(parent, &left, &right)?.max(0.0);
    candidates.push(CandidateSplit {
        attribute: test.attribute,
        test,
        gain,
    });
    Ok(())
}

/// Best candidate over all attributes (each attribute contributes its own
/// best first) and the highest best-candidate gain among the remaining
/// attributes — 0 when only one attribute yields candidates. Ties break
/// toward the lowest attribute index, then the lowest threshold or
/// lexicographically smallest subset.
pub fn best_two(
    stats: &LeafStats,
    cfg: &SplitConfig,
) -> Result<(CandidateSplit, f64), SplitError> {
    if stats.n() == 0 {
        return Err(SplitError::EmptyStats);
    }
    let mut per_attribute: Vec<CandidateSplit> = Vec::new();
    for attribute in 0..stats.attributes.len() {
        let mut best: Option<CandidateSplit> = None;
        for candidate in enumerate_candidates(stats, attribute, cfg)? {
            if best.as_ref().is_none_or(|b| better_candidate(&candidate, b)) {
                best = Some(candidate);
            }
        }
        if let Some(best) = best {
            per_attribute.push(best);
        }
    }
    if per_attribute.is_empty() {
        return Err(SplitError::NoCandidates);
    }
    let mut best_idx = 0;
    for (i, candidate) in per_attribute.iter().enumerate().skip(1) {
        if better_candidate(candidate, &per_attribute[best_idx]) {
            best_idx = i;
        }
    }
    let second_gain = per_attribute
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best_idx)
        .map(|(_, c)| c.gain)
        .fold(0.0, f64::max);
    Ok((per_attribute.swap_remove(best_idx), second_gain))
}

/// The split rule under an explicit confidence bound.
pub fn decide_split_with(
    bound: &dyn ConfidenceBound,
    best: &CandidateSplit,
    second_gain: f64,
    n: u64,
    cfg: &SplitConfig,
) -> SplitDecision {
    if n < cfg.min_instances || best.gain <= 0.0 {
        return SplitDecision::Defer;
    }
    let eps = bound.epsilon(n, cfg.delta);
    let gap = best.gain - second_gain;
    if gap > eps || eps < cfg.tau {
        SplitDecision::Split(best.test.clone())
    } else {
        SplitDecision::Defer
    }
}

/// The split rule under the default Hoeffding bound: defer until `n` reaches
/// the minimum, then split when the best feature beats the runner-up by more
/// than `epsilon(n, delta)`, or when `epsilon < tau`.
pub fn decide_split(
    best: &CandidateSplit,
    second_gain: f64,
    n: u64,
    cfg: &SplitConfig,
) -> SplitDecision {
    decide_split_with(&HoeffdingBound, best, second_gain, n, cfg)
}
