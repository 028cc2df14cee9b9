//! Exact values of open-loop action sequences.

use serde::Serialize;

use super::AnalysisError;
use crate::model::Model;

/// Largest number of sequences [`enumerate_fixed_sequences`] will evaluate.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedSequenceValue {
    #[serde(skip)]
    pub actions: Vec<usize>,
    pub names: Vec<String>,
    /// Expected terminal reward minus expected cost per round.
    pub value: f64,
}

/// Number of sequences of length `0..l_max`, saturating.
pub fn fixed_sequence_count(model: &Model) -> usize {
    let na = model.num_actions();
    let mut total: usize = 0;
    let mut layer: usize = 1;
    for _ in 0..model.l_max() {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(na);
    }
    total
}

/// Evaluates every fixed sequence of at most `l_max − 1` actions by
/// propagating the state distribution forward, sorted by value with the
/// best first. Where an action is undefined at the state reached, the round
/// stops there.
pub fn enumerate_fixed_sequences(model: &Model) -> Result<Vec<FixedSequenceValue>, AnalysisError> {
    let count = fixed_sequence_count(model);
    if count > ENUMERATION_LIMIT {
        return Err(AnalysisError::TooManySequences {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut dist = vec![0.0; model.num_states()];
    for &(x, p) in model.initial() {
        dist[x] = p;
    }
    let mut out = Vec::with_capacity(count);
    let mut prefix = Vec::new();
    extend(model, 1, &dist, 0.0, &mut prefix, &mut out);
    out.sort_by(|a, b| b.value.total_cmp(&a.value));
    Ok(out)
}

/// `settled` is reward already collected from mass that stopped early,
/// net of all costs paid so far.
fn extend(
    model: &Model,
    t: usize,
    dist: &[f64],
    settled: f64,
    prefix: &mut Vec<usize>,
    out: &mut Vec<FixedSequenceValue>,
) {
    let stop_here: f64 = dist
        .iter()
        .enumerate()
        .filter(|(_, &q)| q > 0.0)
        .map(|(x, &q)| q * model.reward(t, x).expect("reachable pair carries a reward"))
        .sum();
    out.push(FixedSequenceValue {
        actions: prefix.clone(),
        names: prefix.iter().map(|&a| model.actions()[a].clone()).collect(),
        value: settled + stop_here,
    });
    if t >= model.l_max() {
        return;
    }
    for a in 0..model.num_actions() {
        let mut next = vec![0.0; model.num_states()];
        let mut settled_next = settled;
        for (x, &q) in dist.iter().enumerate().filter(|(_, &q)| q > 0.0) {
            match model.transition(t, x, a) {
                Some(tr) => {
                    settled_next -= q * tr.cost;
                    for (&p, &y) in tr.probabilities.iter().zip(&tr.successors) {
                        next[y] += q * p;
                    }
                }
                None => settled_next += q * model.reward(t, x).expect("reachable pair carries a reward"),
            }
        }
        prefix.push(a);
        extend(model, t + 1, &next, settled_next, prefix, out);
        prefix.pop();
    }
}
