//! Command implementations behind the `streamcart` binary, exposed as a
//! library so integration tests can drive them directly.

pub mod eval;
pub mod genstream;
pub mod opts;
pub mod source;
pub mod sweep;
pub mod train;
pub mod tsv;

use anyhow::Result;

use crate::opts::{Cli, Command, EvalArgs};
use crate::source::{SourceSpec, EVAL_SEED_OFFSET};

/// The eval command: parse the model against the stream's schema, then run a
/// predict-only pass.
pub fn run_eval(args: &EvalArgs) -> Result<eval::Accuracy> {
    let spec = SourceSpec::resolve(&args.stream, args.seed)?;
    let text = std::fs::read_to_string(&args.model)?;
    let model = streamcart::DecisionTree::parse(&text, spec.schema().clone())?;
    let mut source = match &spec {
        SourceSpec::Synthetic { .. } => {
            let eval_seed = args
                .eval_seed
                .unwrap_or(args.seed.wrapping_add(EVAL_SEED_OFFSET));
            spec.holdout_source(args.eval_records, eval_seed)?
        }
        SourceSpec::Csv { .. } => spec.training_source()?,
    };
    let accuracy = eval::evaluate(&model, source.as_mut())?;
    Ok(accuracy)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            train::run(&args)?;
        }
        Command::Eval(args) => {
            let accuracy = run_eval(&args)?;
            println!("accuracy: {accuracy} ({}/{})", accuracy.correct, accuracy.total);
        }
        Command::Sweep(args) => {
            sweep::run(&args)?;
        }
        Command::Genstream(args) => {
            genstream::run(&args)?;
        }
    }
    Ok(())
}
