//! Shared fixtures for the benchmarks: seeded values, streams and leaf
//! statistics.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use streamcart::datagen::{generate_concept, generate_stream, GeneratedStream};
use streamcart::schema::SharedSchema;
use streamcart::split::LeafStats;
use streamcart::tree::DecisionTree;
use streamcart::GeneratorConfig;

pub fn seeded_values(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

pub fn numeric_config(attrs: usize, seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        numeric_attrs: attrs,
        nominal_attrs: 0,
        nominal_domain: 0,
        classes: 2,
        concept_depth: attrs.min(10),
        noise: 0.1,
        seed,
    }
}

pub fn fixture_stream(
    cfg: &GeneratorConfig,
    n: u64,
) -> (SharedSchema, Arc<DecisionTree>, GeneratedStream) {
    let (schema, concept) = generate_concept(cfg).expect("valid config");
    let concept = Arc::new(concept);
    let stream = generate_stream(&concept, cfg, n);
    (schema, concept, stream)
}

/// Leaf statistics filled from `n` seeded records of a numeric stream.
pub fn filled_stats(attrs: usize, bins: usize, n: u64, seed: u64) -> (SharedSchema, LeafStats) {
    use streamcart::stream::StreamSource;
    let cfg = numeric_config(attrs, seed);
    let (schema, _, mut stream) = fixture_stream(&cfg, n);
    let mut stats = LeafStats::new(&schema, bins);
    while let Some(inst) = stream.next_instance().expect("synthetic stream") {
        stats.update(&inst).expect("instance fits schema");
    }
    (schema, stats)
}
