use crate::engine::{EngineError, Policy, Step};
use crate::model::{Choice, Model};

/// `seq[t]` while the sequence lasts, then stop.
pub fn fixed_sequence_action(seq: &[usize], t: usize) -> Choice {
    match seq.get(t - 1) {
        Some(&a) => Choice::Continue(a),
        None => Choice::Stop,
    }
}

/// Plays the same action sequence every round, stopping early if an action
/// is not defined at the state reached.
#[derive(Debug, Clone)]
pub struct FixedSequencePolicy {
    seq: Vec<usize>,
}

impl FixedSequencePolicy {
    pub fn new(model: &Model, seq: Vec<usize>) -> Result<Self, EngineError> {
        if seq.len() >= model.l_max() {
            return Err(EngineError::Config(format!(
                "a fixed sequence holds at most l_max - 1 = {} actions, got {}",
                model.l_max() - 1,
                seq.len()
            )));
        }
        if let Some(&a) = seq.iter().find(|&&a| a >= model.num_actions()) {
            return Err(EngineError::Config(format!("unknown action index {a}")));
        }
        Ok(Self { seq })
    }

    /// Resolves action names against the model.
    pub fn from_names<S: AsRef<str>>(model: &Model, names: &[S]) -> Result<Self, EngineError> {
        let seq = names
            .iter()
            .map(|n| {
                model
                    .action_id(n.as_ref())
                    .ok_or_else(|| EngineError::Config(format!("unknown action {:?}", n.as_ref())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(model, seq)
    }
}

impl Policy for FixedSequencePolicy {
    fn name(&self) -> &str {
        "fixed"
    }

    fn select(&mut self, step: &Step<'_>) -> Choice {
        match fixed_sequence_action(&self.seq, step.stage) {
            Choice::Continue(a) if step.available.contains(&a) => Choice::Continue(a),
            _ => Choice::Stop,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_then_stop() {
        assert_eq!(fixed_sequence_action(&[0, 1], 1), Choice::Continue(0));
        assert_eq!(fixed_sequence_action(&[0, 1], 2), Choice::Continue(1));
        assert_eq!(fixed_sequence_action(&[0, 1], 3), Choice::Stop);
        assert_eq!(fixed_sequence_action(&[], 1), Choice::Stop);
    }
}
