//! Seeded synthetic stream generators.
//!
//! A random concept tree is grown over a synthetic schema; streams draw
//! attribute values uniformly, label them with the concept's prediction, and
//! flip a configurable fraction of labels to a random other class. Identical
//! configurations produce byte-identical streams.

use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::schema::{AttrValue, AttributeSpec, Instance, Schema, SharedSchema};
use crate::stream::{StreamError, StreamSource};
use crate::tree::{DecisionTree, SplitTest};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
}

/// Shape of a synthetic stream: attribute mix, class count, concept depth,
/// label noise, and the seed everything derives from.
#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub numeric_attrs: usize,
    pub nominal_attrs: usize,
    /// Domain size for every nominal attribute.
    pub nominal_domain: usize,
    pub classes: usize,
    pub concept_depth: usize,
    /// Probability that a generated label is flipped to a random other class.
    pub noise: f64,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), DatagenError> {
        if self.numeric_attrs + self.nominal_attrs == 0 {
            return Err(DatagenError::InvalidConfig(
                "need at least one attribute".into(),
            ));
        }
        if self.nominal_attrs > 0 && self.nominal_domain < 2 {
            return Err(DatagenError::InvalidConfig(
                "nominal domain must have at least two values".into(),
            ));
        }
        if self.classes < 2 {
            return Err(DatagenError::InvalidConfig("need at least two classes".into()));
        }
        if self.concept_depth < 1 {
            return Err(DatagenError::InvalidConfig("concept depth must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(DatagenError::InvalidConfig(
                "noise must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    fn build_schema(&self) -> Schema {
        let mut attributes = Vec::with_capacity(self.numeric_attrs + self.nominal_attrs);
        for i in 0..self.numeric_attrs {
            attributes.push(AttributeSpec::numeric(format!("num{i}")));
        }
        for i in 0..self.nominal_attrs {
            let domain = (0..self.nominal_domain).map(|v| format!("v{v}")).collect();
            attributes.push(AttributeSpec::nominal(format!("cat{i}"), domain));
        }
        let classes = (0..self.classes).map(|k| format!("class{k}")).collect();
        Schema::new(attributes, classes).expect("generated schema is valid")
    }
}

fn random_test(rng: &mut ChaCha8Rng, schema: &Schema) -> SplitTest {
    let attribute = rng.gen_range(0..schema.attribute_count());
    match &schema.attributes()[attribute].kind {
        crate::schema::AttributeKind::Numeric => {
            SplitTest::threshold(attribute, rng.gen::<f64>())
        }
        crate::schema::AttributeKind::Nominal { domain } => {
            let d = domain.len();
            // Nonempty proper subset.
            let mask = rng.gen_range(1..(1u64 << d) - 1);
            let values = (0..d).filter(|v| mask >> v & 1 == 1).collect();
            SplitTest::subset(attribute, values)
        }
    }
}

/// Grows the ground-truth concept: a full binary tree of the configured
/// depth with uniformly random tests, leaves labeled round-robin and then
/// shuffled so every class appears whenever the leaf count allows.
pub fn generate_concept(
    cfg: &GeneratorConfig,
) -> Result<(SharedSchema, DecisionTree), DatagenError> {
    cfg.validate()?;
    let schema = Arc::new(cfg.build_schema());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut concept = DecisionTree::new(schema.clone());
    for _ in 1..cfg.concept_depth {
        for leaf in concept.leaf_ids().collect::<Vec<_>>() {
            let test = random_test(&mut rng, &schema);
            concept
                .apply_split(leaf, test)
                .expect("generated test is valid");
        }
    }
    let leaves: Vec<_> = concept.leaf_ids().collect();
    let mut labels: Vec<usize> = (0..leaves.len()).map(|i| i % cfg.classes).collect();
    labels.shuffle(&mut rng);
    for (leaf, label) in leaves.into_iter().zip(labels) {
        concept
            .set_leaf_summary(leaf, label, 0)
            .expect("concept leaf exists");
    }
    Ok((schema, concept))
}

/// Lazily generated labeled stream of `n` instances from a concept.
pub struct GeneratedStream {
    schema: SharedSchema,
    concept: Arc<DecisionTree>,
    rng: ChaCha8Rng,
    noise: f64,
    classes: usize,
    remaining: u64,
}

impl StreamSource for GeneratedStream {
    fn next_instance(&mut self) -> Result<Option<Instance>, StreamError> {
        if self.remaining == 0 {
            return Ok(None);
        }
        self.remaining -= 1;
        let values = self
            .schema
            .attributes()
            .iter()
            .map(|attr| match &attr.kind {
                crate::schema::AttributeKind::Numeric => AttrValue::Numeric(self.rng.gen::<f64>()),
                crate::schema::AttributeKind::Nominal { domain } => {
                    AttrValue::Nominal(self.rng.gen_range(0..domain.len()))
                }
            })
            .collect();
        let mut inst = Instance { values, label: 0 };
        inst.label = self
            .concept
            .predict(&inst)
            .expect("generated instance matches the concept schema");
        if self.noise > 0.0 && self.rng.gen::<f64>() < self.noise {
            let offset = self.rng.gen_range(1..self.classes);
            inst.label = (inst.label + offset) % self.classes;
        }
        Ok(Some(inst))
    }
}

/// A stream of `n` instances labeled by `concept`, seeded by `cfg.seed`.
/// Reseeding the config yields an independent stream over the same concept.
pub fn generate_stream(
    concept: &Arc<DecisionTree>,
    cfg: &GeneratorConfig,
    n: u64,
) -> GeneratedStream {
    // Offset keeps the stream draw independent of the concept draw when the
    // same seed is reused for both.
    let mut seed_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    GeneratedStream {
        schema: concept.schema().clone(),
        concept: concept.clone(),
        rng: ChaCha8Rng::seed_from_u64(seed_rng.gen()),
        noise: cfg.noise,
        classes: cfg.classes,
        remaining: n,
    }
}

/// Built-in stream shapes: record count, attribute count, class count. All
/// presets use numeric attributes, concept depth `min(attrs, 10)`, and 15%
/// label noise; the seed is zero until the caller overrides it.
pub fn preset(name: &str) -> Result<(GeneratorConfig, u64), DatagenError> {
    let (records, attrs, classes) = match name {
        "d1" => (10_000, 5, 2),
        "d2" => (500_000, 70, 5),
        "d3" => (1_500_000, 20, 10),
        "d4" => (4_000_000, 10, 5),
        "d5" => (4_000_000, 15, 2),
        other => return Err(DatagenError::UnknownPreset(other.to_string())),
    };
    Ok((
        GeneratorConfig {
            numeric_attrs: attrs,
            nominal_attrs: 0,
            nominal_domain: 0,
            classes,
            concept_depth: attrs.min(10),
            noise: 0.15,
            seed: 0,
        },
        records,
    ))
}
