//! Property tests over the core invariants: histogram budget/order/mass,
//! routing partition, serialization round-trips, gain nonnegativity, and
//! shard conservation.

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use streamcart::engine::{map_shard, partition_round, read_reduce_output, reduce, write_reduce_output, GlobalStats};
use streamcart::schema::{format_instance, AttrValue, AttributeSpec, Instance, Schema};
use streamcart::split::gini_gain;
use streamcart::stream::parse_instance;
use streamcart::tree::{DecisionTree, SplitTest};
use streamcart::StreamingHistogram;

fn test_schema() -> Arc<Schema> {
    Arc::new(
        Schema::new(
            vec![
                AttributeSpec::numeric("x"),
                AttributeSpec::numeric("y"),
                AttributeSpec::nominal(
                    "c",
                    vec!["a".into(), "b".into(), "d".into(), "e".into()],
                ),
            ],
            vec!["p".into(), "q".into(), "r".into()],
        )
        .unwrap(),
    )
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    Instance {
        values: vec![
            AttrValue::Numeric(rng.gen_range(-100.0..100.0)),
            AttrValue::Numeric(rng.gen_range(-1.0..1.0)),
            AttrValue::Nominal(rng.gen_range(0..4)),
        ],
        label: rng.gen_range(0..3),
    }
}

/// A tree grown by a seeded sequence of random valid splits.
fn random_tree(seed: u64, splits: usize) -> DecisionTree {
    let schema = test_schema();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tree = DecisionTree::new(schema);
    for _ in 0..splits {
        let leaves: Vec<_> = tree.leaf_ids().collect();
        let leaf = leaves[rng.gen_range(0..leaves.len())];
        let test = match rng.gen_range(0..3) {
            0 => SplitTest::threshold(0, rng.gen_range(-100.0..100.0)),
            1 => SplitTest::threshold(1, rng.gen_range(-1.0..1.0)),
            _ => {
                let mask = rng.gen_range(1u32..15);
                SplitTest::subset(2, (0..4).filter(|v| mask >> v & 1 == 1).collect())
            }
        };
        tree.apply_split(leaf, test).unwrap();
        let leaves: Vec<_> = tree.leaf_ids().collect();
        for leaf in leaves {
            tree.set_leaf_summary(leaf, rng.gen_range(0..3), rng.gen_range(0..1000))
                .unwrap();
        }
    }
    tree
}

proptest! {
    #[test]
    fn histogram_budget_order_and_mass(
        values in prop::collection::vec(-1000.0f64..1000.0, 1..300),
        max_bins in 2usize..16,
    ) {
        let mut h = StreamingHistogram::new(max_bins);
        for &x in &values {
            h.update(x).unwrap();
        }
        prop_assert!(h.bins().len() <= max_bins);
        prop_assert!(h
            .bins()
            .windows(2)
            .all(|w| w[0].centroid < w[1].centroid));
        prop_assert!((h.total() - values.len() as f64).abs() < 1e-9);
        let mass: f64 = h.bins().iter().map(|b| b.count).sum();
        prop_assert!((mass - h.total()).abs() < 1e-6);
    }

    #[test]
    fn histogram_merge_is_mass_additive(
        left in prop::collection::vec(-50.0f64..50.0, 1..100),
        right in prop::collection::vec(-50.0f64..50.0, 1..100),
        max_bins in 2usize..12,
    ) {
        let mut a = StreamingHistogram::new(max_bins);
        for &x in &left {
            a.update(x).unwrap();
        }
        let mut b = StreamingHistogram::new(max_bins);
        for &x in &right {
            b.update(x).unwrap();
        }
        a.merge(&b).unwrap();
        prop_assert!(a.bins().len() <= max_bins);
        prop_assert!((a.total() - (left.len() + right.len()) as f64).abs() < 1e-9);
    }

    #[test]
    fn uniform_points_are_strictly_increasing(
        values in prop::collection::vec(-10.0f64..10.0, 2..200),
        intervals in 2usize..32,
    ) {
        let mut h = StreamingHistogram::new(8);
        for &x in &values {
            h.update(x).unwrap();
        }
        let points = h.uniform(intervals).unwrap();
        prop_assert!(points.len() < intervals);
        prop_assert!(points.windows(2).all(|w| w[0] < w[1]));
        let lo = h.bins()[0].centroid;
        let hi = h.bins()[h.bins().len() - 1].centroid;
        prop_assert!(points.iter().all(|&u| u >= lo && u <= hi));
    }

    #[test]
    fn partition_conserves_and_balances(len in 0usize..500, mappers in 1usize..16) {
        let schema = test_schema();
        let mut rng = ChaCha8Rng::seed_from_u64(len as u64);
        let batch: Vec<Instance> = (0..len).map(|_| random_instance(&mut rng)).collect();
        let _ = &schema;
        let shards = partition_round(&batch, mappers);
        prop_assert_eq!(shards.len(), mappers);
        prop_assert_eq!(shards.iter().map(|s| s.len()).sum::<usize>(), len);
        let max = shards.iter().map(|s| s.len()).max().unwrap();
        let min = shards.iter().map(|s| s.len()).min().unwrap();
        prop_assert!(max - min <= 1);
        // Larger shards come first.
        prop_assert!(shards.windows(2).all(|w| w[0].len() >= w[1].len()));
    }

    #[test]
    fn routing_partitions_any_instance_set(seed in any::<u64>(), splits in 0usize..12) {
        let tree = random_tree(seed, splits);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let instances: Vec<Instance> = (0..100).map(|_| random_instance(&mut rng)).collect();
        let mut per_leaf = std::collections::BTreeMap::new();
        for inst in &instances {
            let leaf = tree.route(inst).unwrap();
            *per_leaf.entry(leaf).or_insert(0usize) += 1;
        }
        prop_assert_eq!(per_leaf.values().sum::<usize>(), instances.len());
        let leaf_set: std::collections::BTreeSet<_> = tree.leaf_ids().collect();
        prop_assert!(per_leaf.keys().all(|id| leaf_set.contains(id)));
    }

    #[test]
    fn tree_text_round_trips(seed in any::<u64>(), splits in 0usize..12) {
        let tree = random_tree(seed, splits);
        let text = tree.serialize();
        let parsed = DecisionTree::parse(&text, test_schema()).unwrap();
        prop_assert!(tree.tree_equal(&parsed));
        prop_assert_eq!(parsed.serialize(), text);
    }

    #[test]
    fn instance_text_round_trips(seed in any::<u64>()) {
        let schema = test_schema();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let inst = random_instance(&mut rng);
            let line = format_instance(&inst, &schema);
            prop_assert_eq!(parse_instance(&line, &schema).unwrap(), inst);
        }
    }

    #[test]
    fn gain_is_nonnegative_for_consistent_counts(
        left in prop::collection::vec(0u32..200, 3),
        right in prop::collection::vec(0u32..200, 3),
    ) {
        let left: Vec<f64> = left.into_iter().map(f64::from).collect();
        let right: Vec<f64> = right.into_iter().map(f64::from).collect();
        let parent: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
        prop_assume!(parent.iter().sum::<f64>() > 0.0);
        let gain = gini_gain(&parent, &left, &right).unwrap();
        prop_assert!(gain >= -1e-9);
        prop_assert!(gain <= 1.0);
    }

    #[test]
    fn stats_file_round_trips_after_reduce(seed in any::<u64>(), n in 1usize..200) {
        let schema = test_schema();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch: Vec<Instance> = (0..n).map(|_| random_instance(&mut rng)).collect();
        let tree = random_tree(seed, 3);
        let shards = partition_round(&batch, 3);
        let mut locals: Vec<_> = shards
            .iter()
            .enumerate()
            .map(|(i, s)| map_shard(&tree, s, batch.len(), i).unwrap())
            .collect();
        let mut global = GlobalStats::new();
        reduce(&mut locals, &mut global, 6).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("round-0.stats");
        write_reduce_output(&global, &path).unwrap();
        let reread = read_reduce_output(&path, &schema, 6).unwrap();
        let again = dir.path().join("round-1.stats");
        write_reduce_output(&reread, &again).unwrap();
        prop_assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            std::fs::read_to_string(&again).unwrap()
        );
    }
}
