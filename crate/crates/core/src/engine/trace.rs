//! Record of a single round.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Choice, Model};

/// Actions, feedbacks, states and realized outcomes of one round.
///
/// With `T` the stop stage: `actions` and `states` have length `T`,
/// `feedbacks` and `costs` have length `T - 1`, and `rewards` has length `T`
/// once outcomes are realized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: usize,
    pub actions: Vec<Choice>,
    pub feedbacks: Vec<usize>,
    pub states: Vec<usize>,
    pub costs: Vec<f64>,
    pub rewards: Vec<f64>,
}

/// A broken trace invariant.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("round {round}: {message}")]
pub struct Diagnosis {
    pub round: usize,
    pub message: String,
}

impl RoundTrace {
    pub fn new(round: usize, initial_state: usize) -> Self {
        Self {
            round,
            actions: Vec::new(),
            feedbacks: Vec::new(),
            states: vec![initial_state],
            costs: Vec::new(),
            rewards: Vec::new(),
        }
    }

    /// `T`, the stage at which stop was taken.
    pub fn stop_stage(&self) -> usize {
        self.actions.len()
    }

    pub fn terminal_state(&self) -> usize {
        *self.states.last().expect("trace has an initial state")
    }

    /// Continuation actions taken so far, in order.
    pub fn continuation_actions(&self) -> impl Iterator<Item = usize> + '_ {
        self.actions.iter().filter_map(|c| match c {
            Choice::Continue(a) => Some(*a),
            Choice::Stop => None,
        })
    }

    /// Realized terminal reward minus realized costs.
    pub fn realized_utility(&self) -> f64 {
        self.rewards.last().copied().unwrap_or(0.0) - self.costs.iter().sum::<f64>()
    }

    /// Mean terminal reward of the stop state minus mean costs along the
    /// path, i.e. the trajectory's value under the true parameters.
    pub fn mean_utility(&self, model: &Model) -> f64 {
        let t_stop = self.stop_stage();
        let reward = model
            .reward(t_stop, self.terminal_state())
            .expect("visited states carry a reward");
        let cost: f64 = self
            .continuation_actions()
            .enumerate()
            .map(|(i, a)| model.cost(i + 1, self.states[i], a).expect("visited triplet"))
            .sum();
        reward - cost
    }

    /// Checks every structural invariant against the model.
    pub fn check(&self, model: &Model) -> Result<(), Diagnosis> {
        let fail = |message: String| {
            Err(Diagnosis {
                round: self.round,
                message,
            })
        };
        let t_stop = self.stop_stage();
        if t_stop == 0 || t_stop > model.l_max() {
            return fail(format!("stop stage {t_stop} outside [1, {}]", model.l_max()));
        }
        if self.states.len() != t_stop || self.feedbacks.len() != t_stop - 1 {
            return fail(format!(
                "{} actions, {} states and {} feedbacks are inconsistent",
                t_stop,
                self.states.len(),
                self.feedbacks.len()
            ));
        }
        if self.actions[t_stop - 1] != Choice::Stop {
            return fail("last action is not stop".into());
        }
        if !model.initial().iter().any(|&(x, _)| x == self.states[0]) {
            return fail(format!("initial state {} has no initial mass", model.states()[self.states[0]]));
        }
        for t in 1..t_stop {
            let Choice::Continue(a) = self.actions[t - 1] else {
                return fail(format!("stop taken before the last stage at t={t}"));
            };
            let expected = model.next_state(t, self.states[t - 1], a, self.feedbacks[t - 1]);
            if expected != Some(self.states[t]) {
                return fail(format!("state at t={} does not follow the state mapping", t + 1));
            }
        }
        let realized = !self.rewards.is_empty() || !self.costs.is_empty();
        if realized && (self.costs.len() != t_stop - 1 || self.rewards.len() != t_stop) {
            return fail(format!(
                "{} costs and {} rewards for stop stage {t_stop}",
                self.costs.len(),
                self.rewards.len()
            ));
        }
        Ok(())
    }
}
