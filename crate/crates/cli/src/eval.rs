//! Accuracy tallies and predict-only evaluation.

use std::fmt;

use anyhow::{bail, Result};

use streamcart::stream::StreamSource;
use streamcart::tree::DecisionTree;

/// Running correct/total tally; accuracy is reported to two decimal places
/// as a percentage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Accuracy {
    pub correct: u64,
    pub total: u64,
}

impl Accuracy {
    pub fn record(&mut self, correct: bool) {
        self.total += 1;
        self.correct += u64::from(correct);
    }

    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.correct as f64 / self.total as f64
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.fraction()
    }
}

impl fmt::Display for Accuracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}%", self.percent())
    }
}

/// Predict-only pass over a stream. Errors on an empty stream.
pub fn evaluate(model: &DecisionTree, source: &mut dyn StreamSource) -> Result<Accuracy> {
    let mut accuracy = Accuracy::default();
    while let Some(inst) = source.next_instance()? {
        let predicted = model.predict(&inst)?;
        accuracy.record(predicted == inst.label);
    }
    if accuracy.total == 0 {
        bail!("evaluation stream is empty");
    }
    Ok(accuracy)
}
