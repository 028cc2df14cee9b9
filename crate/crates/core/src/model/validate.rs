//! Validation of [`EnvironmentSpec`] documents and their compiled, index-based
//! form [`Model`].

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use super::environment::{EnvironmentSpec, Location, NoiseModel, INITIAL_STATE};

/// Absolute tolerance on the total mass of a probability vector.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("malformed environment document: {0}")]
    Parse(String),
    #[error("l_max must be at least 1")]
    NoStages,
    #[error("the {0} list is empty")]
    EmptyAlphabet(&'static str),
    #[error("duplicate {kind} identifier `{id}`")]
    Duplicate { kind: &'static str, id: String },
    #[error("initial state `{INITIAL_STATE}` is not declared in `states`")]
    MissingInitialState,
    #[error("{name} must be finite and nonnegative, got {value}")]
    BadScalar { name: &'static str, value: f64 },
    #[error("unknown {kind} `{id}` in {table}")]
    Unknown {
        kind: &'static str,
        id: String,
        table: &'static str,
    },
    #[error("stage key `{key}` in {table} must be an integer in {lo}..={hi}")]
    BadStage {
        key: String,
        table: &'static str,
        lo: usize,
        hi: usize,
    },
    #[error("feedback distribution at {at} has {got} entries, expected {expected}")]
    DistributionLength { at: Location, got: usize, expected: usize },
    #[error("feedback distribution at {at} has invalid entry {value}")]
    InvalidProbability { at: Location, value: f64 },
    #[error("feedback distribution at {at} sums to {sum} (residual {residual:e})")]
    NotNormalized { at: Location, sum: f64, residual: f64 },
    #[error("initial distribution sums to {sum} (residual {residual:e})")]
    InitialNotNormalized { sum: f64, residual: f64 },
    #[error("initial distribution has invalid mass {value} on `{state}`")]
    InvalidInitialMass { state: String, value: f64 },
    #[error("cost {value} at {at} is out of [0, c_max] with c_max = {c_max}")]
    CostOutOfRange { at: Location, value: f64, c_max: f64 },
    #[error("reward {value} at {at} is out of [0, r_max] with r_max = {r_max}")]
    RewardOutOfRange { at: Location, value: f64, r_max: f64 },
    #[error("state_map at {at} has no successor for feedback `{feedback}`")]
    MissingSuccessor { at: Location, feedback: String },
    #[error("{table} has an entry at {at} without a feedback distribution")]
    Orphan { table: &'static str, at: Location },
    #[error("missing {table} entry at {at}")]
    Missing { table: &'static str, at: Location },
}

/// Continuation action or the implicit stop action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Choice {
    Continue(usize),
    Stop,
}

impl Choice {
    /// Dense index where continuation actions occupy `0..num_actions` and
    /// stop sits at `num_actions`.
    pub fn slot(self, num_actions: usize) -> usize {
        match self {
            Choice::Continue(a) => a,
            Choice::Stop => num_actions,
        }
    }

    pub fn from_slot(slot: usize, num_actions: usize) -> Self {
        if slot == num_actions {
            Choice::Stop
        } else {
            Choice::Continue(slot)
        }
    }

    pub fn is_stop(self) -> bool {
        matches!(self, Choice::Stop)
    }
}

/// Feedback law, successors and mean cost of one `(t, x, a)` triplet.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub probabilities: Vec<f64>,
    pub successors: Vec<usize>,
    pub cost: f64,
}

/// A validated environment compiled to dense indices.
///
/// Stages are 1-based in every accessor. States, actions and feedbacks are
/// indices into the declared lists.
#[derive(Debug, Clone)]
pub struct Model {
    spec: EnvironmentSpec,
    state_index: HashMap<String, usize>,
    action_index: HashMap<String, usize>,
    initial: Vec<(usize, f64)>,
    transitions: Vec<Option<Transition>>,
    available: Vec<Vec<usize>>,
    rewards: Vec<Option<f64>>,
}

/// Checks every invariant of an environment document and returns it unchanged.
pub fn validate_spec(spec: EnvironmentSpec) -> Result<EnvironmentSpec, SpecError> {
    Model::new(spec).map(Model::into_spec)
}

fn check_scalar(name: &'static str, value: f64) -> Result<(), SpecError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(SpecError::BadScalar { name, value })
    }
}

fn index_of(kind: &'static str, ids: &[String]) -> Result<HashMap<String, usize>, SpecError> {
    if ids.is_empty() {
        return Err(SpecError::EmptyAlphabet(kind));
    }
    let mut map = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), i).is_some() {
            return Err(SpecError::Duplicate { kind, id: id.clone() });
        }
    }
    Ok(map)
}

fn parse_stage(key: &str, table: &'static str, lo: usize, hi: usize) -> Result<usize, SpecError> {
    match key.parse::<usize>() {
        Ok(t) if (lo..=hi).contains(&t) && t.to_string() == key => Ok(t),
        _ => Err(SpecError::BadStage {
            key: key.to_string(),
            table,
            lo,
            hi,
        }),
    }
}

fn lookup(map: &HashMap<String, usize>, kind: &'static str, id: &str, table: &'static str) -> Result<usize, SpecError> {
    map.get(id).copied().ok_or_else(|| SpecError::Unknown {
        kind,
        id: id.to_string(),
        table,
    })
}

impl Model {
    pub fn new(spec: EnvironmentSpec) -> Result<Self, SpecError> {
        if spec.l_max == 0 {
            return Err(SpecError::NoStages);
        }
        let state_index = index_of("state", &spec.states)?;
        let action_index = index_of("action", &spec.actions)?;
        let feedback_index = index_of("feedback", &spec.feedbacks)?;
        check_scalar("c_max", spec.c_max)?;
        check_scalar("r_max", spec.r_max)?;
        check_scalar("noise sigma", spec.noise.sigma)?;

        let l_max = spec.l_max;
        let ns = spec.states.len();
        let na = spec.actions.len();
        let nf = spec.feedbacks.len();

        let initial = match &spec.initial_dist {
            None => {
                let x = *state_index.get(INITIAL_STATE).ok_or(SpecError::MissingInitialState)?;
                vec![(x, 1.0)]
            }
            Some(dist) => {
                let mut out = Vec::with_capacity(dist.len());
                let mut sum = 0.0;
                for (state, &mass) in dist {
                    let x = lookup(&state_index, "state", state, "initial_dist")?;
                    if !(mass.is_finite() && mass >= 0.0) {
                        return Err(SpecError::InvalidInitialMass {
                            state: state.clone(),
                            value: mass,
                        });
                    }
                    sum += mass;
                    if mass > 0.0 {
                        out.push((x, mass));
                    }
                }
                let residual = sum - 1.0;
                if residual.abs() > NORMALIZATION_TOLERANCE {
                    return Err(SpecError::InitialNotNormalized { sum, residual });
                }
                out.sort_by_key(|&(x, _)| x);
                out
            }
        };

        let mut transitions: Vec<Option<Transition>> = vec![None; l_max.saturating_sub(1) * ns * na];
        let flat = |t: usize, x: usize, a: usize| ((t - 1) * ns + x) * na + a;
        let max_action_stage = l_max.saturating_sub(1);

        // Feedback laws define the domain of every other triplet table.
        for (stage_key, by_state) in &spec.feedback_dist {
            let t = parse_stage(stage_key, "feedback_dist", 1, max_action_stage)?;
            for (state, by_action) in by_state {
                let x = lookup(&state_index, "state", state, "feedback_dist")?;
                for (action, probs) in by_action {
                    let a = lookup(&action_index, "action", action, "feedback_dist")?;
                    let at = Location::triplet(stage_key.as_str(), state.as_str(), action.as_str());
                    if probs.len() != nf {
                        return Err(SpecError::DistributionLength {
                            at,
                            got: probs.len(),
                            expected: nf,
                        });
                    }
                    if let Some(&bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                        return Err(SpecError::InvalidProbability { at, value: bad });
                    }
                    let sum: f64 = probs.iter().sum();
                    let residual = sum - 1.0;
                    if residual.abs() > NORMALIZATION_TOLERANCE {
                        return Err(SpecError::NotNormalized { at, sum, residual });
                    }
                    transitions[flat(t, x, a)] = Some(Transition {
                        probabilities: probs.clone(),
                        successors: Vec::new(),
                        cost: f64::NAN,
                    });
                }
            }
        }

        for (stage_key, by_state) in &spec.state_map {
            let t = parse_stage(stage_key, "state_map", 1, max_action_stage)?;
            for (state, by_action) in by_state {
                let x = lookup(&state_index, "state", state, "state_map")?;
                for (action, by_feedback) in by_action {
                    let a = lookup(&action_index, "action", action, "state_map")?;
                    let at = Location::triplet(stage_key.as_str(), state.as_str(), action.as_str());
                    for (feedback, next) in by_feedback {
                        lookup(&feedback_index, "feedback", feedback, "state_map")?;
                        lookup(&state_index, "state", next, "state_map")?;
                    }
                    let entry = transitions[flat(t, x, a)]
                        .as_mut()
                        .ok_or(SpecError::Orphan { table: "state_map", at: at.clone() })?;
                    let mut successors = Vec::with_capacity(nf);
                    for feedback in &spec.feedbacks {
                        let next = by_feedback.get(feedback).ok_or_else(|| SpecError::MissingSuccessor {
                            at: at.clone(),
                            feedback: feedback.clone(),
                        })?;
                        successors.push(state_index[next]);
                    }
                    entry.successors = successors;
                }
            }
        }

        for (stage_key, by_state) in &spec.cost_mean {
            let t = parse_stage(stage_key, "cost_mean", 1, max_action_stage)?;
            for (state, by_action) in by_state {
                let x = lookup(&state_index, "state", state, "cost_mean")?;
                for (action, &cost) in by_action {
                    let a = lookup(&action_index, "action", action, "cost_mean")?;
                    let at = Location::triplet(stage_key.as_str(), state.as_str(), action.as_str());
                    if !(cost.is_finite() && (0.0..=spec.c_max).contains(&cost)) {
                        return Err(SpecError::CostOutOfRange {
                            at,
                            value: cost,
                            c_max: spec.c_max,
                        });
                    }
                    let entry = transitions[flat(t, x, a)]
                        .as_mut()
                        .ok_or(SpecError::Orphan { table: "cost_mean", at })?;
                    entry.cost = cost;
                }
            }
        }

        let mut rewards = vec![None; l_max * ns];
        for (stage_key, by_state) in &spec.reward_mean {
            let t = parse_stage(stage_key, "reward_mean", 1, l_max)?;
            for (state, &reward) in by_state {
                let x = lookup(&state_index, "state", state, "reward_mean")?;
                if !(reward.is_finite() && (0.0..=spec.r_max).contains(&reward)) {
                    return Err(SpecError::RewardOutOfRange {
                        at: Location::pair(stage_key.as_str(), state.as_str()),
                        value: reward,
                        r_max: spec.r_max,
                    });
                }
                rewards[(t - 1) * ns + x] = Some(reward);
            }
        }

        let mut available = vec![Vec::new(); l_max * ns];
        for t in 1..l_max {
            for x in 0..ns {
                for a in 0..na {
                    let Some(tr) = &transitions[flat(t, x, a)] else { continue };
                    let at = || Location::triplet(t.to_string(), spec.states[x].as_str(), spec.actions[a].as_str());
                    if tr.successors.is_empty() {
                        return Err(SpecError::Missing { table: "state_map", at: at() });
                    }
                    if tr.cost.is_nan() {
                        return Err(SpecError::Missing { table: "cost_mean", at: at() });
                    }
                    if rewards[(t - 1) * ns + x].is_none() {
                        return Err(SpecError::Missing {
                            table: "reward_mean",
                            at: Location::pair(t.to_string(), spec.states[x].as_str()),
                        });
                    }
                    for (&p, &next) in tr.probabilities.iter().zip(&tr.successors) {
                        if p > 0.0 && rewards[t * ns + next].is_none() {
                            return Err(SpecError::Missing {
                                table: "reward_mean",
                                at: Location::pair((t + 1).to_string(), spec.states[next].as_str()),
                            });
                        }
                    }
                    available[(t - 1) * ns + x].push(a);
                }
            }
        }
        for &(x, _) in &initial {
            if rewards[x].is_none() {
                return Err(SpecError::Missing {
                    table: "reward_mean",
                    at: Location::pair("1", spec.states[x].as_str()),
                });
            }
        }

        Ok(Self {
            spec,
            state_index,
            action_index,
            initial,
            transitions,
            available,
            rewards,
        })
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    pub fn into_spec(self) -> EnvironmentSpec {
        self.spec
    }

    pub fn l_max(&self) -> usize {
        self.spec.l_max
    }

    pub fn num_states(&self) -> usize {
        self.spec.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.spec.actions.len()
    }

    pub fn num_feedbacks(&self) -> usize {
        self.spec.feedbacks.len()
    }

    pub fn states(&self) -> &[String] {
        &self.spec.states
    }

    pub fn actions(&self) -> &[String] {
        &self.spec.actions
    }

    pub fn feedbacks(&self) -> &[String] {
        &self.spec.feedbacks
    }

    pub fn noise(&self) -> NoiseModel {
        self.spec.noise
    }

    pub fn state_id(&self, name: &str) -> Option<usize> {
        self.state_index.get(name).copied()
    }

    pub fn action_id(&self, name: &str) -> Option<usize> {
        self.action_index.get(name).copied()
    }

    pub fn feedback_id(&self, name: &str) -> Option<usize> {
        self.spec.feedbacks.iter().position(|f| f == name)
    }

    pub fn choice_name(&self, choice: Choice) -> &str {
        match choice {
            Choice::Continue(a) => &self.spec.actions[a],
            Choice::Stop => "stop",
        }
    }

    /// Support of the first-stage state distribution, sorted by state index.
    pub fn initial(&self) -> &[(usize, f64)] {
        &self.initial
    }

    /// `K = l_max * |X| * |A ∪ {stop}|`.
    pub fn triplet_count(&self) -> usize {
        self.l_max() * self.num_states() * (self.num_actions() + 1)
    }

    /// Continuation actions with a declared feedback law at `(t, x)`, in
    /// declaration order. Empty at `l_max`.
    pub fn available(&self, t: usize, x: usize) -> &[usize] {
        &self.available[(t - 1) * self.num_states() + x]
    }

    pub fn transition(&self, t: usize, x: usize, a: usize) -> Option<&Transition> {
        if t == 0 || t >= self.l_max() {
            return None;
        }
        let idx = ((t - 1) * self.num_states() + x) * self.num_actions() + a;
        self.transitions[idx].as_ref()
    }

    /// `φ_t(x, a, f)`.
    pub fn next_state(&self, t: usize, x: usize, a: usize, f: usize) -> Option<usize> {
        self.transition(t, x, a).map(|tr| tr.successors[f])
    }

    pub fn cost(&self, t: usize, x: usize, a: usize) -> Option<f64> {
        self.transition(t, x, a).map(|tr| tr.cost)
    }

    pub fn reward(&self, t: usize, x: usize) -> Option<f64> {
        if t == 0 || t > self.l_max() {
            return None;
        }
        self.rewards[(t - 1) * self.num_states() + x]
    }

    /// Stage-state pairs reachable from the initial distribution through
    /// positive-probability feedbacks, sorted by `(t, x)`.
    pub fn reachable(&self) -> Vec<(usize, usize)> {
        let mut seen: BTreeSet<(usize, usize)> = self.initial.iter().map(|&(x, _)| (1, x)).collect();
        let mut frontier: Vec<usize> = self.initial.iter().map(|&(x, _)| x).collect();
        for t in 1..self.l_max() {
            let mut next = BTreeSet::new();
            for &x in &frontier {
                for &a in self.available(t, x) {
                    let tr = self.transition(t, x, a).expect("available triplet has a transition");
                    for (&p, &y) in tr.probabilities.iter().zip(&tr.successors) {
                        if p > 0.0 {
                            next.insert(y);
                        }
                    }
                }
            }
            seen.extend(next.iter().map(|&y| (t + 1, y)));
            frontier = next.into_iter().collect();
        }
        seen.into_iter().collect()
    }
}
