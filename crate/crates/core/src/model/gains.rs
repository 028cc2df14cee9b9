//! Ex-ante rewards, gains, suboptimality gaps and benchmark values derived
//! from the true parameters of a [`Model`].

use serde_json::{json, Map, Value};

use super::validate::{Choice, Model};
use crate::analysis::values::compute_values;

/// Absolute tolerance under which a gap counts as zero when building the
/// optimal set.
pub const OPTIMALITY_TOLERANCE: f64 = 1e-12;

/// Derived quantities of one tabulated stage-state pair.
///
/// Per-action vectors have length `|A| + 1` with stop in the last slot
/// (see [`Choice::slot`]); unavailable actions hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGains {
    pub stage: usize,
    pub state: usize,
    /// `r_{t,x}`, equal to the stop gain.
    pub reward: f64,
    pub cost: Vec<Option<f64>>,
    /// Ex-ante terminal reward `y_{t,x,a}`.
    pub ex_ante: Vec<Option<f64>>,
    pub gain: Vec<Option<f64>>,
    pub delta: Vec<Option<f64>>,
    pub optimal: Vec<Choice>,
    pub g_star: f64,
    /// Value of following the benchmark from `(t, x)`.
    pub mu_star: f64,
    /// Value of taking the action and then the worst continuation.
    pub mu_lower: Vec<Option<f64>>,
    /// Deviation gap `mu_star - mu_lower`.
    pub omega: Vec<Option<f64>>,
    /// Action the benchmark takes here.
    pub benchmark: Choice,
}

impl StateGains {
    pub fn is_optimal(&self, choice: Choice) -> bool {
        self.optimal.contains(&choice)
    }

    /// Choices available here, continuation actions first, stop last.
    pub fn choices(&self) -> impl Iterator<Item = Choice> + '_ {
        let na = self.cost.len();
        self.gain
            .iter()
            .enumerate()
            .filter(|(_, g)| g.is_some())
            .map(move |(slot, _)| Choice::from_slot(slot, na))
    }
}

/// All derived gain quantities, indexed by `(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    l_max: usize,
    num_states: usize,
    num_actions: usize,
    triplet_count: usize,
    entries: Vec<Option<StateGains>>,
}

impl GainTable {
    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// `K = l_max * |X| * |A ∪ {stop}|`.
    pub fn triplet_count(&self) -> usize {
        self.triplet_count
    }

    pub fn get(&self, t: usize, x: usize) -> Option<&StateGains> {
        if t == 0 || t > self.l_max || x >= self.num_states {
            return None;
        }
        self.entries[(t - 1) * self.num_states + x].as_ref()
    }

    pub(crate) fn get_mut(&mut self, t: usize, x: usize) -> Option<&mut StateGains> {
        self.entries[(t - 1) * self.num_states + x].as_mut()
    }

    pub fn iter(&self) -> impl Iterator<Item = &StateGains> {
        self.entries.iter().flatten()
    }

    pub fn gain(&self, t: usize, x: usize, choice: Choice) -> Option<f64> {
        self.get(t, x)?.gain[choice.slot(self.num_actions)]
    }

    pub fn delta(&self, t: usize, x: usize, choice: Choice) -> Option<f64> {
        self.get(t, x)?.delta[choice.slot(self.num_actions)]
    }

    pub fn omega(&self, t: usize, x: usize, choice: Choice) -> Option<f64> {
        self.get(t, x)?.omega[choice.slot(self.num_actions)]
    }

    pub fn g_star(&self, t: usize, x: usize) -> Option<f64> {
        self.get(t, x).map(|e| e.g_star)
    }

    pub fn mu_star(&self, t: usize, x: usize) -> Option<f64> {
        self.get(t, x).map(|e| e.mu_star)
    }

    pub fn benchmark_choice(&self, t: usize, x: usize) -> Option<Choice> {
        self.get(t, x).map(|e| e.benchmark)
    }

    /// Expected per-round gain of the benchmark under the initial distribution.
    pub fn benchmark_value(&self, model: &Model) -> f64 {
        model
            .initial()
            .iter()
            .map(|&(x, p)| p * self.mu_star(1, x).expect("initial state is tabulated"))
            .sum()
    }

    /// Largest deviation gap over the whole grid.
    pub fn omega_max(&self) -> f64 {
        self.iter()
            .flat_map(|e| e.omega.iter().flatten().copied())
            .fold(0.0, f64::max)
    }

    /// Renders the table with state and action names.
    pub fn to_json(&self, model: &Model) -> Value {
        let mut stages = Map::new();
        for e in self.iter() {
            let mut actions = Map::new();
            for choice in e.choices() {
                let slot = choice.slot(self.num_actions);
                let ex_ante = match choice {
                    Choice::Stop => e.reward,
                    Choice::Continue(_) => e.ex_ante[slot].expect("available action"),
                };
                actions.insert(
                    model.choice_name(choice).to_string(),
                    json!({
                        "y": ex_ante,
                        "g": e.gain[slot],
                        "delta": e.delta[slot],
                        "mu_lower": e.mu_lower[slot],
                        "omega": e.omega[slot],
                        "optimal": e.is_optimal(choice),
                    }),
                );
            }
            let stage = stages
                .entry(e.stage.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
            stage.as_object_mut().expect("object").insert(
                model.states()[e.state].clone(),
                json!({
                    "r": e.reward,
                    "g_star": e.g_star,
                    "mu_star": e.mu_star,
                    "benchmark": model.choice_name(e.benchmark),
                    "actions": actions,
                }),
            );
        }
        Value::Object(stages)
    }
}

/// Tabulates `y`, `g`, `Δ`, the optimal sets and `g*` for every stage-state
/// pair with a declared reward, then fills the benchmark and deviation
/// values by backward induction.
pub fn compute_gain_table(model: &Model) -> GainTable {
    let l_max = model.l_max();
    let ns = model.num_states();
    let na = model.num_actions();
    let mut entries = Vec::with_capacity(l_max * ns);
    for t in 1..=l_max {
        for x in 0..ns {
            entries.push(model.reward(t, x).map(|reward| stage_state_gains(model, t, x, reward)));
        }
    }
    let mut table = GainTable {
        l_max,
        num_states: ns,
        num_actions: na,
        triplet_count: model.triplet_count(),
        entries,
    };
    compute_values(model, &mut table);
    table
}

fn stage_state_gains(model: &Model, t: usize, x: usize, reward: f64) -> StateGains {
    let na = model.num_actions();
    let mut cost = vec![None; na];
    let mut ex_ante = vec![None; na];
    let mut gain = vec![None; na + 1];
    for &a in model.available(t, x) {
        let tr = model.transition(t, x, a).expect("available triplet");
        let y: f64 = tr
            .probabilities
            .iter()
            .zip(&tr.successors)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, &next)| p * model.reward(t + 1, next).expect("validated successor reward"))
            .sum();
        cost[a] = Some(tr.cost);
        ex_ante[a] = Some(y);
        gain[a] = Some(y - tr.cost);
    }
    gain[na] = Some(reward);

    let g_star = gain.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut delta = vec![None; na + 1];
    let mut optimal = Vec::new();
    for (slot, g) in gain.iter().enumerate() {
        if let Some(g) = g {
            let gap = g_star - g;
            if gap <= OPTIMALITY_TOLERANCE {
                delta[slot] = Some(0.0);
                optimal.push(Choice::from_slot(slot, na));
            } else {
                delta[slot] = Some(gap);
            }
        }
    }

    StateGains {
        stage: t,
        state: x,
        reward,
        cost,
        ex_ante,
        gain,
        delta,
        optimal,
        g_star,
        mu_star: f64::NAN,
        mu_lower: vec![None; na + 1],
        omega: vec![None; na + 1],
        benchmark: Choice::Stop,
    }
}
