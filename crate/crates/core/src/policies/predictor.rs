//! Terminal diagnosis made when a screening round stops.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Benign,
    Malignant,
}

/// Label weights observed per terminal `(stage, state)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyTable {
    weights: BTreeMap<(usize, usize), [f64; 2]>,
}

impl FrequencyTable {
    pub fn add(&mut self, stage: usize, state: usize, label: Label, weight: f64) {
        let w = self.weights.entry((stage, state)).or_default();
        w[label as usize] += weight;
    }

    pub fn weights(&self, stage: usize, state: usize) -> [f64; 2] {
        self.weights.get(&(stage, state)).copied().unwrap_or_default()
    }

    /// The heavier label; ties and unseen keys give benign.
    pub fn majority(&self, stage: usize, state: usize) -> Label {
        let [benign, malignant] = self.weights(stage, state);
        if malignant > benign {
            Label::Malignant
        } else {
            Label::Benign
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    /// Malignant iff some observed score is at least `cutoff`.
    Threshold { cutoff: usize },
    /// Majority label of the terminal stage and state.
    Frequency(FrequencyTable),
}

impl Predictor {
    /// The guideline's rule: any score of 4 or more.
    pub fn guideline() -> Self {
        Predictor::Threshold { cutoff: 4 }
    }
}

/// Predicts a label from the scores observed in a round and where it ended.
pub fn terminal_predict(scores: &[usize], stage: usize, state: usize, predictor: &Predictor) -> Label {
    match predictor {
        Predictor::Threshold { cutoff } => {
            if scores.iter().any(|s| s >= cutoff) {
                Label::Malignant
            } else {
                Label::Benign
            }
        }
        Predictor::Frequency(table) => table.majority(stage, state),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_rule() {
        let p = Predictor::guideline();
        assert_eq!(terminal_predict(&[2, 3], 3, 0, &p), Label::Benign);
        assert_eq!(terminal_predict(&[5], 2, 0, &p), Label::Malignant);
        assert_eq!(terminal_predict(&[], 1, 0, &p), Label::Benign);
    }

    #[test]
    fn frequency_rule() {
        let mut table = FrequencyTable::default();
        let empty = Predictor::Frequency(table.clone());
        assert_eq!(terminal_predict(&[], 1, 0, &empty), Label::Benign);
        table.add(2, 3, Label::Malignant, 1.0);
        table.add(2, 3, Label::Benign, 1.0);
        assert_eq!(table.majority(2, 3), Label::Benign);
        table.add(2, 3, Label::Malignant, 0.5);
        assert_eq!(terminal_predict(&[6], 2, 3, &Predictor::Frequency(table)), Label::Malignant);
    }
}
