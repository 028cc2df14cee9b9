//! Contextual UCB1 over composite action sequences.
//!
//! Each initial state is a context with its own UCB1 instance. An arm is an
//! ordered sequence of distinct actions, played in full before stopping.

use crate::engine::{Policy, RoundContext, RoundTrace, Step};
use crate::model::{Choice, Model};

/// Every ordering of every nonempty subset of `actions`, shorter sequences
/// first, each length in lexicographic order of positions in `actions`.
pub fn composite_arms(actions: &[usize]) -> Vec<Vec<usize>> {
    fn extend(actions: &[usize], len: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        for &a in actions {
            if !prefix.contains(&a) {
                prefix.push(a);
                extend(actions, len, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    for len in 1..=actions.len() {
        extend(actions, len, &mut Vec::new(), &mut out);
    }
    out
}

/// `mean + sqrt(2 ln(total) / plays)`, infinite for an unplayed arm.
pub fn ucb1_index(mean: f64, plays: u64, total: u64) -> f64 {
    if plays == 0 {
        return f64::INFINITY;
    }
    mean + (2.0 * (total as f64).ln() / plays as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmStats {
    pub plays: u64,
    pub mean: f64,
}

/// The first unplayed arm if any, otherwise the first arm with the largest
/// index.
pub fn ucb1_action(arms: &[ArmStats]) -> usize {
    if let Some(i) = arms.iter().position(|s| s.plays == 0) {
        return i;
    }
    let total: u64 = arms.iter().map(|s| s.plays).sum();
    let mut best = 0;
    let mut best_index = f64::NEG_INFINITY;
    for (i, s) in arms.iter().enumerate() {
        let u = ucb1_index(s.mean, s.plays, total);
        if u > best_index {
            best = i;
            best_index = u;
        }
    }
    best
}

/// Rewards each arm with the round's realized utility.
#[derive(Debug, Clone)]
pub struct CbbPolicy {
    arms: Vec<Vec<usize>>,
    stats: Vec<Vec<ArmStats>>,
    context: usize,
    current: usize,
}

impl CbbPolicy {
    /// Arms are built from all of the model's actions; contexts are the
    /// model's states.
    pub fn new(model: &Model) -> Self {
        let actions: Vec<usize> = (0..model.num_actions()).collect();
        let arms = composite_arms(&actions);
        let stats = vec![vec![ArmStats::default(); arms.len()]; model.num_states()];
        Self {
            arms,
            stats,
            context: 0,
            current: 0,
        }
    }

    pub fn arms(&self) -> &[Vec<usize>] {
        &self.arms
    }

    pub fn arm_stats(&self, context: usize) -> &[ArmStats] {
        &self.stats[context]
    }
}

impl Policy for CbbPolicy {
    fn name(&self) -> &str {
        "cbb"
    }

    fn begin_round(&mut self, _round: usize, context: &RoundContext) {
        self.context = context.initial_state;
        self.current = ucb1_action(&self.stats[self.context]);
    }

    fn select(&mut self, step: &Step<'_>) -> Choice {
        match self.arms[self.current].get(step.stage - 1) {
            Some(&a) if step.available.contains(&a) => Choice::Continue(a),
            _ => Choice::Stop,
        }
    }

    fn observe(&mut self, trace: &RoundTrace) {
        let s = &mut self.stats[self.context][self.current];
        s.plays += 1;
        s.mean += (trace.realized_utility() - s.mean) / s.plays as f64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_arms_in_canonical_order() {
        let arms = composite_arms(&[0, 1, 2]);
        assert_eq!(arms.len(), 15);
        assert_eq!(arms[0], vec![0]);
        assert_eq!(arms[3], vec![0, 1]);
        assert_eq!(arms[9], vec![0, 1, 2]);
        assert_eq!(arms[14], vec![2, 1, 0]);
    }

    #[test]
    fn index_reference_value() {
        let expected = 0.5 + (2.0 * 100f64.ln() / 10.0).sqrt();
        assert!((ucb1_index(0.5, 10, 100) - expected).abs() < 1e-12);
        assert!((ucb1_index(0.5, 10, 100) - 1.460).abs() < 5e-4);
    }

    #[test]
    fn unplayed_arms_first_then_dominant_arm() {
        let mut arms = vec![ArmStats::default(); 4];
        assert_eq!(ucb1_action(&arms), 0);
        arms[0] = ArmStats { plays: 1, mean: 0.0 };
        assert_eq!(ucb1_action(&arms), 1);
        for (i, a) in arms.iter_mut().enumerate() {
            *a = ArmStats {
                plays: 10_000,
                mean: if i == 2 { 1.0 } else { 0.0 },
            };
        }
        assert_eq!(ucb1_action(&arms), 2);
    }
}
