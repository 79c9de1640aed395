//! Bounded-size mergeable streaming histograms.
//!
//! A histogram is a sorted list of `(centroid, count)` bins capped at
//! `max_bins`. Inserting a value either increments an exactly-matching bin or
//! adds a singleton bin; whenever the budget is exceeded, the two bins with
//! the smallest centroid gap are replaced by one bin at their count-weighted
//! mean. Merging unions two bin lists and collapses the same way. Cumulative
//! counts below a point are estimated by trapezoidal interpolation between
//! adjacent bins, and candidate split points are obtained by inverting that
//! interpolated cumulative sum at evenly spaced mass targets.
//!
//! When two pairs tie on centroid gap the leftmost pair merges, so folding a
//! fixed sequence of histograms is bitwise reproducible.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HistogramError {
    #[error("value {0} is not finite")]
    NonFinite(f64),
    #[error("bin budget mismatch: {left} vs {right}")]
    BudgetMismatch { left: usize, right: usize },
    #[error("operation requires a nonempty histogram")]
    Empty,
    #[error("need at least 2 quantile intervals, got {0}")]
    BadIntervalCount(usize),
    #[error("nominal index {index} out of range for domain of size {domain}")]
    IndexOutOfRange { index: usize, domain: usize },
    #[error("malformed bin list at `{0}`")]
    BadBinList(String),
}

/// One histogram bin: a centroid and a positive mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub centroid: f64,
    pub count: f64,
}

/// Bounded mergeable sketch of a numeric feature's distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamingHistogram {
    bins: Vec<Bin>,
    max_bins: usize,
    total: f64,
}

impl StreamingHistogram {
    /// A new empty histogram with the given bin budget (>= 1).
    pub fn new(max_bins: usize) -> Self {
        assert!(max_bins >= 1, "bin budget must be positive");
        StreamingHistogram {
            bins: Vec::new(),
            max_bins,
            total: 0.0,
        }
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn max_bins(&self) -> usize {
        self.max_bins
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Inserts one observation of `x` (unit mass).
    pub fn update(&mut self, x: f64) -> Result<(), HistogramError> {
        if !x.is_finite() {
            return Err(HistogramError::NonFinite(x));
        }
        match self
            .bins
            .binary_search_by(|bin| bin.centroid.partial_cmp(&x).unwrap())
        {
            Ok(i) => self.bins[i].count += 1.0,
            Err(i) => {
                self.bins.insert(
                    i,
                    Bin {
                        centroid: x,
                        count: 1.0,
                    },
                );
                self.shrink_to_budget();
            }
        }
        self.total += 1.0;
        Ok(())
    }

    /// Folds `other` into `self`: multiset union of bins (same-centroid bins
    /// combined), then closest pairs merge until the budget holds. Both
    /// histograms must share a bin budget.
    pub fn merge(&mut self, other: &StreamingHistogram) -> Result<(), HistogramError> {
        if self.max_bins != other.max_bins {
            return Err(HistogramError::BudgetMismatch {
                left: self.max_bins,
                right: other.max_bins,
            });
        }
        if other.bins.is_empty() {
            return Ok(());
        }
        let mut merged = Vec::with_capacity(self.bins.len() + other.bins.len());
        let (mut i, mut j) = (0, 0);
        while i < self.bins.len() && j < other.bins.len() {
            let (a, b) = (self.bins[i], other.bins[j]);
            if a.centroid < b.centroid {
                merged.push(a);
                i += 1;
            } else if b.centroid < a.centroid {
                merged.push(b);
                j += 1;
            } else {
                merged.push(Bin {
                    centroid: a.centroid,
                    count: a.count + b.count,
                });
                i += 1;
                j += 1;
            }
        }
        merged.extend_from_slice(&self.bins[i..]);
        merged.extend_from_slice(&other.bins[j..]);
        self.bins = merged;
        self.total += other.total;
        self.shrink_to_budget();
        Ok(())
    }

    /// Returns a copy of this histogram under a different bin budget,
    /// collapsing closest pairs if the new budget is smaller.
    pub fn with_max_bins(&self, max_bins: usize) -> StreamingHistogram {
        assert!(max_bins >= 1, "bin budget must be positive");
        let mut out = StreamingHistogram {
            bins: self.bins.clone(),
            max_bins,
            total: self.total,
        };
        out.shrink_to_budget();
        out
    }

    fn shrink_to_budget(&mut self) {
        while self.bins.len() > self.max_bins {
            // Leftmost minimal gap wins ties.
            let mut best = 0;
            let mut best_gap = f64::INFINITY;
            for k in 0..self.bins.len() - 1 {
                let gap = self.bins[k + 1].centroid - self.bins[k].centroid;
                if gap < best_gap {
                    best_gap = gap;
                    best = k;
                }
            }
            let (a, b) = (self.bins[best], self.bins[best + 1]);
            let count = a.count + b.count;
            self.bins[best] = Bin {
                centroid: (a.centroid * a.count + b.centroid * b.count) / count,
                count,
            };
            self.bins.remove(best + 1);
        }
    }

    /// Estimated number of points `<= b` via trapezoidal interpolation
    /// between adjacent bins. Points below the first centroid count as 0 and
    /// `b` at or beyond the last centroid returns the full total; the result
    /// is clamped to `[0, total]`.
    pub fn sum(&self, b: f64) -> Result<f64, HistogramError> {
        if self.bins.is_empty() {
            return Err(HistogramError::Empty);
        }
        if b < self.bins[0].centroid {
            return Ok(0.0);
        }
        if b >= self.bins[self.bins.len() - 1].centroid {
            return Ok(self.total);
        }
        // Linear scan; budgets are small and the cost scales with the bin
        // count by design.
        let mut below = 0.0;
        let mut i = 0;
        while self.bins[i + 1].centroid <= b {
            below += self.bins[i].count;
            i += 1;
        }
        let (lo, hi) = (self.bins[i], self.bins[i + 1]);
        let z = (b - lo.centroid) / (hi.centroid - lo.centroid);
        let mass_at_b = lo.count + (hi.count - lo.count) * z;
        let s = below + lo.count / 2.0 + (lo.count + mass_at_b) / 2.0 * z;
        Ok(s.clamp(0.0, self.total))
    }

    /// Candidate split points: at most `intervals - 1` strictly increasing
    /// values whose interpolated cumulative sums approximate
    /// `j * total / intervals`. Targets that would land outside the centroid
    /// range are dropped, and a histogram with fewer than two bins has no
    /// interior point to offer.
    pub fn uniform(&self, intervals: usize) -> Result<Vec<f64>, HistogramError> {
        if self.bins.is_empty() {
            return Err(HistogramError::Empty);
        }
        if intervals < 2 {
            return Err(HistogramError::BadIntervalCount(intervals));
        }
        if self.bins.len() < 2 {
            return Ok(Vec::new());
        }
        // Cumulative interpolated mass at each centroid: half of a bin's
        // count sits below its centroid.
        let mut at_centroid = Vec::with_capacity(self.bins.len());
        let mut below = 0.0;
        for bin in &self.bins {
            at_centroid.push(below + bin.count / 2.0);
            below += bin.count;
        }
        let first = self.bins[0].centroid;
        let last = self.bins[self.bins.len() - 1].centroid;
        let mut points = Vec::new();
        let mut i = 0;
        for j in 1..intervals {
            let target = j as f64 * self.total / intervals as f64;
            if target < at_centroid[0] || target > at_centroid[at_centroid.len() - 1] {
                continue;
            }
            while at_centroid[i + 1] < target {
                i += 1;
            }
            let (lo, hi) = (self.bins[i], self.bins[i + 1]);
            let d = target - at_centroid[i];
            let slope = hi.count - lo.count;
            let z = if d <= 0.0 {
                0.0
            } else if slope.abs() < f64::EPSILON * (lo.count + hi.count) {
                d / lo.count
            } else {
                let radicand = (lo.count * lo.count + 2.0 * slope * d).max(0.0);
                (-lo.count + radicand.sqrt()) / slope
            };
            let u = lo.centroid + z.clamp(0.0, 1.0) * (hi.centroid - lo.centroid);
            if u < first || u > last {
                continue;
            }
            if points.last().is_none_or(|&prev| u > prev) {
                points.push(u);
            }
        }
        Ok(points)
    }

    /// Renders the bin list as `p1:m1;p2:m2;...` with shortest round-trip
    /// decimals.
    pub fn serialize_bins(&self) -> String {
        let mut out = String::new();
        for (k, bin) in self.bins.iter().enumerate() {
            if k > 0 {
                out.push(';');
            }
            out.push_str(&format!("{}:{}", bin.centroid, bin.count));
        }
        out
    }

    /// Rebuilds a histogram from [`serialize_bins`] output and a bin budget.
    pub fn parse_bins(text: &str, max_bins: usize) -> Result<StreamingHistogram, HistogramError> {
        let mut hist = StreamingHistogram::new(max_bins);
        if text.is_empty() {
            return Ok(hist);
        }
        for part in text.split(';') {
            let (p, m) = part
                .split_once(':')
                .ok_or_else(|| HistogramError::BadBinList(part.to_string()))?;
            let centroid: f64 = p
                .parse()
                .map_err(|_| HistogramError::BadBinList(part.to_string()))?;
            let count: f64 = m
                .parse()
                .map_err(|_| HistogramError::BadBinList(part.to_string()))?;
            if !centroid.is_finite() || !count.is_finite() || count <= 0.0 {
                return Err(HistogramError::BadBinList(part.to_string()));
            }
            if let Some(prev) = hist.bins.last() {
                if prev.centroid >= centroid {
                    return Err(HistogramError::BadBinList(part.to_string()));
                }
            }
            hist.bins.push(Bin { centroid, count });
            hist.total += count;
        }
        if hist.bins.len() > max_bins {
            return Err(HistogramError::BudgetMismatch {
                left: hist.bins.len(),
                right: max_bins,
            });
        }
        Ok(hist)
    }
}

/// Per-domain-value frequency table for one (nominal attribute, class) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NominalCounts {
    counts: Vec<u64>,
}

impl NominalCounts {
    pub fn new(domain_size: usize) -> Self {
        NominalCounts {
            counts: vec![0; domain_size],
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn domain_size(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn update(&mut self, value: usize) -> Result<(), HistogramError> {
        if value >= self.counts.len() {
            return Err(HistogramError::IndexOutOfRange {
                index: value,
                domain: self.counts.len(),
            });
        }
        self.counts[value] += 1;
        Ok(())
    }

    pub fn add(&mut self, other: &NominalCounts) -> Result<(), HistogramError> {
        if self.counts.len() != other.counts.len() {
            return Err(HistogramError::IndexOutOfRange {
                index: other.counts.len(),
                domain: self.counts.len(),
            });
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        Ok(())
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        NominalCounts { counts }
    }
}
