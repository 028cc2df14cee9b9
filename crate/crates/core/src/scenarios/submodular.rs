//! Adaptive set-function maximization as a staged bandit.
//!
//! Each item has a hidden binary state drawn independently from its prior.
//! Selecting an item reveals its state as the feedback (`1` for on, `-1` for
//! off). A state records which items were selected and what they revealed,
//! so an item can never be selected twice. Costs are zero and the terminal
//! reward of a state is the set function evaluated on it.

use crate::model::{EnvironmentSpec, NoiseModel, INITIAL_STATE};

use super::ScenarioError;

/// Largest ground set accepted; the state space grows as `3^n`.
pub const MAX_ITEMS: usize = 6;

/// Observed items: `None` for unselected, `Some(on)` once revealed.
pub type Observation = [Option<bool>];

/// Placeholder action of an empty ground set, never available.
const NO_ITEM: &str = "none";

/// Name of a partial observation, e.g. `a=1,c=-1`; `∅` when nothing is
/// selected.
pub fn observation_name(items: &[String], obs: &Observation) -> String {
    let parts: Vec<String> = items
        .iter()
        .zip(obs)
        .filter_map(|(item, o)| o.map(|on| format!("{item}={}", if on { "1" } else { "-1" })))
        .collect();
    if parts.is_empty() {
        INITIAL_STATE.to_string()
    } else {
        parts.join(",")
    }
}

/// Builds the staged problem for ground set `items` with independent priors
/// `P(on)` and set function `h`, which must be nonnegative.
pub fn submodular_env(
    items: &[String],
    priors: &[f64],
    h: &dyn Fn(&Observation) -> f64,
) -> Result<EnvironmentSpec, ScenarioError> {
    let n = items.len();
    if n > MAX_ITEMS {
        return Err(ScenarioError::TooManyItems { count: n, max: MAX_ITEMS });
    }
    if priors.len() != n {
        return Err(ScenarioError::Config(format!("{} priors for {n} items", priors.len())));
    }
    if let Some((i, &p)) = priors.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(ScenarioError::InvalidPrior {
            item: items[i].clone(),
            value: p,
        });
    }

    // every observation, grouped by the number of selected items
    let mut layers: Vec<Vec<Vec<Option<bool>>>> = vec![Vec::new(); n + 1];
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let obs: Vec<Option<bool>> = (0..n)
            .map(|_| {
                let digit = c % 3;
                c /= 3;
                match digit {
                    0 => None,
                    1 => Some(false),
                    _ => Some(true),
                }
            })
            .collect();
        layers[obs.iter().filter(|o| o.is_some()).count()].push(obs);
    }

    let states: Vec<String> = layers.iter().flatten().map(|o| observation_name(items, o)).collect();
    let actions = if n == 0 { vec![NO_ITEM.to_string()] } else { items.to_vec() };
    let mut spec = EnvironmentSpec::empty(n + 1, states, actions, vec!["-1".into(), "1".into()]);
    spec.noise = NoiseModel::none();

    let mut r_max: f64 = 0.0;
    for (k, layer) in layers.iter().enumerate() {
        let t = k + 1;
        for obs in layer {
            let name = observation_name(items, obs);
            let value = h(obs);
            if !(value.is_finite() && value >= 0.0) {
                return Err(ScenarioError::Config(format!("set function is {value} at {name}")));
            }
            r_max = r_max.max(value);
            spec.set_reward(t, &name, value);
            if t > n {
                continue;
            }
            for (i, item) in items.iter().enumerate().filter(|(i, _)| obs[*i].is_none()) {
                let successors: Vec<String> = [false, true]
                    .iter()
                    .map(|&on| {
                        let mut next = obs.clone();
                        next[i] = Some(on);
                        observation_name(items, &next)
                    })
                    .collect();
                let successors: Vec<&str> = successors.iter().map(String::as_str).collect();
                spec.set_transition(t, &name, item, vec![1.0 - priors[i], priors[i]], &successors, 0.0);
            }
        }
    }
    spec.r_max = r_max;
    Ok(spec)
}

/// Weighted coverage: the total weight of elements covered by items that
/// are on. Each item lists the element indices it covers.
pub fn coverage_function(covers: Vec<Vec<usize>>, weights: Vec<f64>) -> impl Fn(&Observation) -> f64 {
    move |obs: &Observation| {
        let mut covered = vec![false; weights.len()];
        for (cover, o) in covers.iter().zip(obs) {
            if *o == Some(true) {
                for &e in cover {
                    covered[e] = true;
                }
            }
        }
        covered.iter().zip(&weights).filter(|(c, _)| **c).map(|(_, w)| w).sum()
    }
}
