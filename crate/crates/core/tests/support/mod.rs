//! Brute-force references computed straight from the string-keyed tables of
//! an [`EnvironmentSpec`], sharing no code with the library's index-based
//! model.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smab_core::model::INITIAL_STATE;
use smab_core::{EnvironmentSpec, NoiseModel};

/// `None` is stop, `Some(action)` a continuation.
pub type Decision = Option<String>;

pub fn feedback_law<'a>(spec: &'a EnvironmentSpec, t: usize, x: &str, a: &str) -> Option<&'a Vec<f64>> {
    spec.feedback_dist.get(&t.to_string())?.get(x)?.get(a)
}

pub fn successor<'a>(spec: &'a EnvironmentSpec, t: usize, x: &str, a: &str, f: &str) -> &'a str {
    &spec.state_map[&t.to_string()][x][a][f]
}

pub fn cost(spec: &EnvironmentSpec, t: usize, x: &str, a: &str) -> f64 {
    spec.cost_mean[&t.to_string()][x][a]
}

pub fn reward(spec: &EnvironmentSpec, t: usize, x: &str) -> f64 {
    spec.reward_mean[&t.to_string()][x]
}

/// Continuation actions declared at `(t, x)`, in declaration order.
pub fn actions_at(spec: &EnvironmentSpec, t: usize, x: &str) -> Vec<String> {
    if t >= spec.l_max {
        return Vec::new();
    }
    spec.actions
        .iter()
        .filter(|a| feedback_law(spec, t, x, a).is_some())
        .cloned()
        .collect()
}

/// Feedback-weighted successor reward, summed term by term.
pub fn ex_ante(spec: &EnvironmentSpec, t: usize, x: &str, a: &str) -> f64 {
    let probs = feedback_law(spec, t, x, a).expect("declared action");
    let mut total = 0.0;
    for (f, &p) in spec.feedbacks.iter().zip(probs) {
        if p > 0.0 {
            total += p * reward(spec, t + 1, successor(spec, t, x, a, f));
        }
    }
    total
}

/// `g` of a decision; stop gains the current reward.
pub fn gain(spec: &EnvironmentSpec, t: usize, x: &str, d: &Decision) -> f64 {
    match d {
        None => reward(spec, t, x),
        Some(a) => ex_ante(spec, t, x, a) - cost(spec, t, x, a),
    }
}

/// Every decision at `(t, x)`: stop first, then the declared actions.
pub fn decisions(spec: &EnvironmentSpec, t: usize, x: &str) -> Vec<Decision> {
    std::iter::once(None)
        .chain(actions_at(spec, t, x).into_iter().map(Some))
        .collect()
}

/// Decisions within `1e-12` of the best gain.
pub fn optimal_set(spec: &EnvironmentSpec, t: usize, x: &str) -> Vec<Decision> {
    let all = decisions(spec, t, x);
    let best = all.iter().map(|d| gain(spec, t, x, d)).fold(f64::NEG_INFINITY, f64::max);
    all.into_iter().filter(|d| best - gain(spec, t, x, d) <= 1e-12).collect()
}

/// Expected utility of following a deterministic Markov policy from
/// `(t, x)`, by recursion over the feedback tree.
pub fn policy_value(spec: &EnvironmentSpec, policy: &BTreeMap<(usize, String), Decision>, t: usize, x: &str) -> f64 {
    let d = if t >= spec.l_max { None } else { policy[&(t, x.to_string())].clone() };
    match d {
        None => reward(spec, t, x),
        Some(a) => {
            let probs = feedback_law(spec, t, x, &a).unwrap();
            let mut v = -cost(spec, t, x, &a);
            for (f, &p) in spec.feedbacks.iter().zip(probs) {
                if p > 0.0 {
                    v += p * policy_value(spec, policy, t + 1, successor(spec, t, x, &a, f));
                }
            }
            v
        }
    }
}

/// All deterministic Markov policies whose decision at each `(t, x)` comes
/// from `options(t, x)`.
///
/// The state determines the future law of the process, so restricting to
/// Markov policies loses nothing when maximizing or minimizing a value.
pub fn enumerate_policies(
    spec: &EnvironmentSpec,
    options: &dyn Fn(usize, &str) -> Vec<Decision>,
) -> Vec<BTreeMap<(usize, String), Decision>> {
    let mut points = Vec::new();
    for t in 1..spec.l_max {
        for x in &spec.states {
            points.push(((t, x.clone()), options(t, x)));
        }
    }
    let mut out = vec![BTreeMap::new()];
    for (key, opts) in points {
        let mut next = Vec::with_capacity(out.len() * opts.len());
        for partial in &out {
            for d in &opts {
                let mut p = partial.clone();
                p.insert(key.clone(), d.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

fn has_reward(spec: &EnvironmentSpec, t: usize, x: &str) -> bool {
    spec.reward_mean.get(&t.to_string()).is_some_and(|m| m.contains_key(x))
}

/// Reference `μ*` at every tabulated `(t, x)`: the best value among
/// policies that only ever take a greedy-optimal decision and stop whenever
/// stopping is greedy-optimal.
pub fn mu_star_oracle(spec: &EnvironmentSpec) -> BTreeMap<(usize, String), f64> {
    let greedy = |t: usize, x: &str| {
        if !has_reward(spec, t, x) {
            return vec![None];
        }
        let o = optimal_set(spec, t, x);
        if o.contains(&None) {
            vec![None]
        } else {
            o
        }
    };
    let policies = enumerate_policies(spec, &greedy);
    let mut out = BTreeMap::new();
    for t in 1..=spec.l_max {
        for x in spec.states.iter().filter(|x| has_reward(spec, t, x)) {
            let best = policies
                .iter()
                .map(|p| policy_value(spec, p, t, x))
                .fold(f64::NEG_INFINITY, f64::max);
            out.insert((t, x.clone()), best);
        }
    }
    out
}

/// Reference `μ_lower` for every declared triplet: the lowest expected
/// utility of taking `a` and then following any policy at all.
pub fn mu_lower_oracle(spec: &EnvironmentSpec) -> BTreeMap<(usize, String, String), f64> {
    let any = |t: usize, x: &str| if has_reward(spec, t, x) { decisions(spec, t, x) } else { vec![None] };
    let policies = enumerate_policies(spec, &any);
    let mut out = BTreeMap::new();
    for t in 1..spec.l_max {
        for x in spec.states.iter().filter(|x| has_reward(spec, t, x)) {
            for a in actions_at(spec, t, x) {
                let probs = feedback_law(spec, t, x, &a).unwrap();
                let worst = policies
                    .iter()
                    .map(|p| {
                        let mut v = -cost(spec, t, x, &a);
                        for (f, &q) in spec.feedbacks.iter().zip(probs) {
                            if q > 0.0 {
                                v += q * policy_value(spec, p, t + 1, successor(spec, t, x, &a, f));
                            }
                        }
                        v
                    })
                    .fold(f64::INFINITY, f64::min);
                out.insert((t, x.clone(), a), worst);
            }
        }
    }
    out
}

/// Value of the best adaptive policy from `(t, x)` by exhaustive search of
/// the decision tree, without memoization.
pub fn optimal_value(spec: &EnvironmentSpec, t: usize, x: &str) -> f64 {
    let mut best = reward(spec, t, x);
    for a in actions_at(spec, t, x) {
        let probs = feedback_law(spec, t, x, &a).unwrap();
        let mut v = -cost(spec, t, x, &a);
        for (f, &p) in spec.feedbacks.iter().zip(probs) {
            if p > 0.0 {
                v += p * optimal_value(spec, t + 1, successor(spec, t, x, &a, f));
            }
        }
        best = best.max(v);
    }
    best
}

/// First-stage states with positive mass.
pub fn initial_states(spec: &EnvironmentSpec) -> Vec<(String, f64)> {
    match &spec.initial_dist {
        Some(d) => d.iter().filter(|(_, p)| **p > 0.0).map(|(x, p)| (x.clone(), *p)).collect(),
        None => vec![(INITIAL_STATE.to_string(), 1.0)],
    }
}

/// A random valid environment with at most 3 stages, 4 states, 3 actions
/// and 3 feedbacks. With `coarse` set, probabilities, costs and rewards
/// come from small grids so that exact ties between gains are common.
pub fn random_env(seed: u64, coarse: bool) -> EnvironmentSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l_max = rng.random_range(2..=3);
    let ns = rng.random_range(1..=4);
    let na = rng.random_range(1..=3);
    let nf = rng.random_range(1..=3);
    let mut states = vec![INITIAL_STATE.to_string()];
    states.extend((1..ns).map(|i| format!("s{i}")));
    let actions: Vec<String> = (0..na).map(|i| format!("a{i}")).collect();
    let feedbacks: Vec<String> = (0..nf).map(|i| format!("f{i}")).collect();
    let mut spec = EnvironmentSpec::empty(l_max, states.clone(), actions.clone(), feedbacks);
    spec.c_max = 1.0;
    spec.r_max = 5.0;
    spec.noise = NoiseModel::none();

    let value = |rng: &mut ChaCha8Rng, hi: f64| {
        if coarse {
            rng.random_range(0..=4) as f64 * hi / 4.0
        } else {
            rng.random_range(0.0..hi)
        }
    };
    for t in 1..=l_max {
        for x in &states {
            let r = value(&mut rng, 5.0);
            spec.set_reward(t, x, r);
        }
    }
    for t in 1..l_max {
        for x in &states {
            for a in &actions {
                if rng.random_bool(0.25) {
                    continue;
                }
                let mut probs: Vec<f64> = (0..nf)
                    .map(|_| if rng.random_bool(0.2) { 0.0 } else if coarse { rng.random_range(1..=3) as f64 } else { rng.random_range(0.05..1.0) })
                    .collect();
                if probs.iter().all(|&p| p == 0.0) {
                    probs[0] = 1.0;
                }
                let total: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|p| *p /= total);
                let successors: Vec<&str> = (0..nf).map(|_| states[rng.random_range(0..ns)].as_str()).collect();
                let c = value(&mut rng, 1.0);
                spec.set_transition(t, x, a, probs, &successors, c);
            }
        }
    }
    spec
}
