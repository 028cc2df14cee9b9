//! Serializable description of a staged bandit environment.
//!
//! Every table is keyed by stage (a decimal string), then state id, then
//! action id, so a document is a complete, self-describing generative model.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::validate::SpecError;

/// Identifier of the state every round starts in unless an initial
/// distribution is given.
pub const INITIAL_STATE: &str = "∅";

/// stage -> state -> action -> value
pub type TripletTable<T> = BTreeMap<String, BTreeMap<String, BTreeMap<String, T>>>;

/// stage -> state -> value
pub type PairTable<T> = BTreeMap<String, BTreeMap<String, T>>;

/// Law of the zero-mean noise added to realized costs and terminal rewards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    /// Normal with standard deviation `sigma`.
    Gaussian,
    /// Uniform on `[-sigma, sigma]`.
    BoundedUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub family: NoiseFamily,
    /// Sub-Gaussian parameter. Zero disables noise.
    pub sigma: f64,
}

impl NoiseModel {
    pub fn gaussian(sigma: f64) -> Self {
        Self {
            family: NoiseFamily::Gaussian,
            sigma,
        }
    }

    pub fn bounded_uniform(sigma: f64) -> Self {
        Self {
            family: NoiseFamily::BoundedUniform,
            sigma,
        }
    }

    pub fn none() -> Self {
        Self::gaussian(0.0)
    }

    /// Maps a standard normal draw and a unit uniform draw to a noise value.
    /// Only the input matching the family is used.
    pub fn transform(&self, standard_normal: f64, unit_uniform: f64) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        match self.family {
            NoiseFamily::Gaussian => self.sigma * standard_normal,
            NoiseFamily::BoundedUniform => self.sigma * (2.0 * unit_uniform - 1.0),
        }
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

/// Full generative model of a staged bandit problem.
///
/// Stages run from 1 to `l_max`. Continuation actions exist only at stages
/// `1..l_max`; at `l_max` the round is forced to stop. The stop action is
/// implicit and never listed in `actions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    pub l_max: usize,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub feedbacks: Vec<String>,
    /// Probability vector over `feedbacks`, in declaration order.
    pub feedback_dist: TripletTable<Vec<f64>>,
    /// feedback id -> next state id.
    pub state_map: TripletTable<BTreeMap<String, String>>,
    pub cost_mean: TripletTable<f64>,
    pub reward_mean: PairTable<f64>,
    pub c_max: f64,
    pub r_max: f64,
    pub noise: NoiseModel,
    /// Optional distribution of the first-stage state. When absent every
    /// round starts in [`INITIAL_STATE`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_dist: Option<BTreeMap<String, f64>>,
}

impl EnvironmentSpec {
    /// An environment with the given alphabets and empty tables.
    pub fn empty(l_max: usize, states: Vec<String>, actions: Vec<String>, feedbacks: Vec<String>) -> Self {
        Self {
            l_max,
            states,
            actions,
            feedbacks,
            feedback_dist: BTreeMap::new(),
            state_map: BTreeMap::new(),
            cost_mean: BTreeMap::new(),
            reward_mean: BTreeMap::new(),
            c_max: 0.0,
            r_max: 0.0,
            noise: NoiseModel::none(),
            initial_dist: None,
        }
    }

    /// Declares a continuation action at `(stage, state)` with its feedback
    /// law, successor per feedback (in `feedbacks` order) and mean cost.
    pub fn set_transition(
        &mut self,
        stage: usize,
        state: &str,
        action: &str,
        probabilities: Vec<f64>,
        successors: &[&str],
        cost: f64,
    ) {
        let key = stage.to_string();
        let successors = self
            .feedbacks
            .iter()
            .zip(successors)
            .map(|(f, s)| (f.clone(), (*s).to_string()))
            .collect();
        insert3(&mut self.feedback_dist, &key, state, action, probabilities);
        insert3(&mut self.state_map, &key, state, action, successors);
        insert3(&mut self.cost_mean, &key, state, action, cost);
    }

    pub fn set_reward(&mut self, stage: usize, state: &str, reward: f64) {
        self.reward_mean
            .entry(stage.to_string())
            .or_default()
            .insert(state.to_string(), reward);
    }

    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        serde_json::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("environment serializes")
    }
}

fn insert3<T>(table: &mut TripletTable<T>, stage: &str, state: &str, action: &str, value: T) {
    table
        .entry(stage.to_string())
        .or_default()
        .entry(state.to_string())
        .or_default()
        .insert(action.to_string(), value);
}

/// Position of an entry inside the environment tables, used in error reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub stage: String,
    pub state: String,
    pub action: Option<String>,
}

impl Location {
    pub fn pair(stage: impl Into<String>, state: impl Into<String>) -> Self {
        Self {
            stage: stage.into(),
            state: state.into(),
            action: None,
        }
    }

    pub fn triplet(stage: impl Into<String>, state: impl Into<String>, action: impl Into<String>) -> Self {
        Self {
            stage: stage.into(),
            state: state.into(),
            action: Some(action.into()),
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.action {
            Some(a) => write!(f, "(t={}, x={}, a={})", self.stage, self.state, a),
            None => write!(f, "(t={}, x={})", self.stage, self.state),
        }
    }
}
