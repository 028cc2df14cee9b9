//! The greedy oracle that knows every gain.

use std::sync::Arc;

use crate::engine::{Policy, Step};
use crate::model::{Choice, GainTable};

/// The benchmark's action at `(t, x)`: stop when stop maximizes the gain or
/// at `l_max`, otherwise the maximizing continuation action.
///
/// When several continuation actions tie, the one with the largest
/// benchmark continuation value is taken, then the first in declaration
/// order.
pub fn benchmark_action(t: usize, x: usize, table: &GainTable) -> Choice {
    if t >= table.l_max() {
        return Choice::Stop;
    }
    table.benchmark_choice(t, x).unwrap_or(Choice::Stop)
}

/// Plays [`benchmark_action`] every stage.
///
/// With the once-per-round mask, an already used action is replaced by the
/// best remaining choice by gain, stop winning ties.
#[derive(Debug, Clone)]
pub struct BenchmarkPolicy {
    table: Arc<GainTable>,
    mask: bool,
}

impl BenchmarkPolicy {
    pub fn new(table: Arc<GainTable>) -> Self {
        Self { table, mask: false }
    }

    pub fn with_mask(mut self, mask: bool) -> Self {
        self.mask = mask;
        self
    }
}

impl Policy for BenchmarkPolicy {
    fn name(&self) -> &str {
        "benchmark"
    }

    fn select(&mut self, step: &Step<'_>) -> Choice {
        let choice = benchmark_action(step.stage, step.state, &self.table);
        match choice {
            Choice::Continue(a) if self.mask && step.used(a) => {
                let entry = self.table.get(step.stage, step.state).expect("visited pair is tabulated");
                let mut best = (Choice::Stop, entry.reward);
                for &b in step.available.iter().filter(|&&b| !step.used(b)) {
                    let g = entry.gain[b].expect("available action");
                    if g > best.1 {
                        best = (Choice::Continue(b), g);
                    }
                }
                best.0
            }
            _ => choice,
        }
    }
}
