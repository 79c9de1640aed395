//! Single-pass streaming CART learner parallelized with a
//! controller/mapper/reducer round structure.
//!
//! Records are consumed from a forward-only stream in rounds of `G` records.
//! Each round is horizontally partitioned across `P` mappers that route
//! records through the current tree snapshot and accumulate per-leaf class
//! counts and per-(attribute, class) distributions. A reducer folds the
//! mapper-local statistics into persistent global statistics (materialized
//! to a stats file per round), and the controller grows the tree wherever
//! the best candidate split beats the runner-up feature by more than the
//! Hoeffding bound for the instances seen at that leaf.
//!
//! The crate is organized by stage:
//!
//! * [`schema`] / [`stream`] — instances, attribute schemas, CSV ingestion
//! * [`histogram`] — bounded mergeable sketches of numeric feature values
//! * [`tree`] — the binary CART structure, routing, and serialization
//! * [`split`] — Gini gain evaluation and the split-confidence decision
//! * [`engine`] — the round loop: partition, map, reduce, decide
//! * [`datagen`] — seeded synthetic stream generators and presets

pub mod datagen;
pub mod engine;
pub mod histogram;
pub mod schema;
pub mod split;
pub mod stream;
pub mod tree;

pub use datagen::{preset, GeneratorConfig};
pub use engine::{EngineConfig, GlobalStats, MapperState, RoundReport};
pub use histogram::{Bin, NominalCounts, StreamingHistogram};
pub use schema::{AttrValue, AttributeKind, AttributeSpec, Instance, Schema};
pub use split::{CandidateSplit, LeafStats, SplitConfig, SplitDecision};
pub use stream::{CountingSource, StreamSource, VecStream};
pub use tree::{DecisionTree, LeafId, SplitKind, SplitTest, TreeMetrics};
