//! Resolves stream flags into a schema plus replayable stream factories.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};

use streamcart::datagen::{generate_concept, generate_stream, preset};
use streamcart::schema::{parse_schema, SharedSchema};
use streamcart::stream::{open_csv_stream, StreamSource};
use streamcart::tree::DecisionTree;
use streamcart::GeneratorConfig;

use crate::opts::StreamArgs;

/// Stream seeds derive from the concept seed at a fixed offset so held-out
/// draws never replay the training draw.
pub const EVAL_SEED_OFFSET: u64 = 1_000_003;

pub enum SourceSpec {
    Synthetic {
        cfg: GeneratorConfig,
        records: u64,
        schema: SharedSchema,
        concept: Arc<DecisionTree>,
    },
    Csv {
        path: PathBuf,
        schema: SharedSchema,
    },
}

impl SourceSpec {
    /// Resolves the flag triplet preset / custom shape / CSV. `seed` feeds
    /// the synthetic concept and its training stream.
    pub fn resolve(args: &StreamArgs, seed: u64) -> Result<SourceSpec> {
        if let Some(path) = &args.input {
            let schema_path = args
                .schema
                .as_ref()
                .context("--input requires --schema")?;
            let text = std::fs::read_to_string(schema_path)
                .with_context(|| format!("reading schema {}", schema_path.display()))?;
            let schema = Arc::new(parse_schema(&text)?);
            return Ok(SourceSpec::Csv {
                path: path.clone(),
                schema,
            });
        }
        let (mut cfg, mut records) = match &args.preset {
            Some(name) => preset(name)?,
            None => {
                let total = args.attrs + args.nominal_attrs;
                if total == 0 {
                    bail!("a synthetic shape needs at least one attribute");
                }
                (
                    GeneratorConfig {
                        numeric_attrs: args.attrs,
                        nominal_attrs: args.nominal_attrs,
                        nominal_domain: args.domain,
                        classes: args.classes,
                        concept_depth: args.depth.unwrap_or(total.min(10)),
                        noise: args.noise,
                        seed: 0,
                    },
                    10_000,
                )
            }
        };
        cfg.seed = seed;
        if let Some(depth) = args.depth {
            cfg.concept_depth = depth;
        }
        if let Some(n) = args.records {
            records = n;
        }
        let (schema, concept) = generate_concept(&cfg)?;
        Ok(SourceSpec::Synthetic {
            cfg,
            records,
            schema,
            concept: Arc::new(concept),
        })
    }

    pub fn schema(&self) -> &SharedSchema {
        match self {
            SourceSpec::Synthetic { schema, .. } => schema,
            SourceSpec::Csv { schema, .. } => schema,
        }
    }

    pub fn concept(&self) -> Option<&Arc<DecisionTree>> {
        match self {
            SourceSpec::Synthetic { concept, .. } => Some(concept),
            SourceSpec::Csv { .. } => None,
        }
    }

    /// The training stream: the synthetic draw, or the whole CSV file.
    pub fn training_source(&self) -> Result<Box<dyn StreamSource>> {
        match self {
            SourceSpec::Synthetic {
                cfg,
                records,
                concept,
                ..
            } => Ok(Box::new(generate_stream(concept, cfg, *records))),
            SourceSpec::Csv { path, schema } => {
                let stream = open_csv_stream(path, schema.clone())
                    .with_context(|| format!("opening {}", path.display()))?;
                Ok(Box::new(stream))
            }
        }
    }

    /// A held-out stream over the same concept under a different seed.
    /// CSV sources have no concept to draw from.
    pub fn holdout_source(
        &self,
        eval_records: u64,
        eval_seed: u64,
    ) -> Result<Box<dyn StreamSource>> {
        match self {
            SourceSpec::Synthetic { cfg, concept, .. } => {
                let eval_cfg = GeneratorConfig {
                    seed: eval_seed,
                    ..cfg.clone()
                };
                Ok(Box::new(generate_stream(concept, &eval_cfg, eval_records)))
            }
            SourceSpec::Csv { .. } => {
                bail!("held-out evaluation needs a synthetic stream; use --prequential for CSV input")
            }
        }
    }
}
