//! Empirical checks of FAL's confidence guarantees.
//!
//! Three properties are audited per replication:
//!
//! - every sample-mean gain stays within its confidence number of the true
//!   gain in every round after the first;
//! - every selected action's gap to the best gain is at most twice its
//!   confidence number;
//! - on replications where the first property held, each suboptimal
//!   triplet was chosen no more often than [`lemma2_count_bound`] allows.
//!
//! The first two should fail in at most a `δ` fraction of replications. The
//! report allows binomial slack of `3 · sqrt(δ(1 − δ) / reps)` on that
//! fraction.

use serde::Serialize;

use super::bounds::lemma2_count_bound;
use crate::engine::ExperimentResult;
use crate::model::{Choice, GainTable, Model};
use crate::policies::FalParams;

/// A single failed inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditEvent {
    pub round: usize,
    pub stage: usize,
    pub state: usize,
    #[serde(skip)]
    pub choice: Choice,
    pub lhs: f64,
    pub rhs: f64,
}

/// Audit records of one replication, filled in by an auditing learner.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditLog {
    pub estimate_checks: u64,
    pub estimate_violations: u64,
    /// Earliest round whose estimates broke a confidence number.
    pub first_estimate_violation: Option<AuditEvent>,
    pub selections: u64,
    pub selection_violations: u64,
    pub first_selection_violation: Option<AuditEvent>,
}

impl AuditLog {
    /// Checks `|ĝ − g| ≤ conf` for an estimate in force from `round` on.
    pub fn record_estimate(&mut self, round: usize, stage: usize, state: usize, choice: Choice, deviation: f64, conf: f64) {
        self.estimate_checks += 1;
        if deviation > conf {
            self.estimate_violations += 1;
            self.first_estimate_violation.get_or_insert(AuditEvent {
                round,
                stage,
                state,
                choice,
                lhs: deviation,
                rhs: conf,
            });
        }
    }

    /// Checks `g* − g_chosen ≤ 2 conf_chosen` for a selection made in `round`.
    pub fn record_selection(&mut self, round: usize, stage: usize, state: usize, choice: Choice, gap: f64, width: f64) {
        self.selections += 1;
        if gap > width {
            self.selection_violations += 1;
            self.first_selection_violation.get_or_insert(AuditEvent {
                round,
                stage,
                state,
                choice,
                lhs: gap,
                rhs: width,
            });
        }
    }

    /// Whether some estimate was out of its confidence number during rounds
    /// `2..=horizon`.
    pub fn estimates_violated(&self, horizon: usize) -> bool {
        self.first_estimate_violation.is_some_and(|e| e.round <= horizon)
    }

    pub fn selections_violated(&self) -> bool {
        self.selection_violations > 0
    }
}

/// A suboptimal triplet chosen more often than its cap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountExcess {
    pub replication: usize,
    pub stage: usize,
    pub state: String,
    pub action: String,
    pub count: u64,
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub replications: usize,
    pub delta: f64,
    pub slack: f64,
    /// `delta + slack`.
    pub allowed_fraction: f64,
    pub estimate_violating_replications: usize,
    pub estimate_violation_fraction: f64,
    pub selection_violating_replications: usize,
    pub selection_violation_fraction: f64,
    pub selections: u64,
    pub selection_violations: u64,
    /// Replications on which every estimate stayed in its confidence number.
    pub count_checked_replications: usize,
    pub count_excesses: Vec<CountExcess>,
}

impl AuditReport {
    pub fn estimates_pass(&self) -> bool {
        self.estimate_violation_fraction <= self.allowed_fraction
    }

    pub fn selections_pass(&self) -> bool {
        self.selection_violation_fraction <= self.allowed_fraction
    }

    pub fn counts_pass(&self) -> bool {
        self.count_excesses.is_empty()
    }
}

/// Aggregates the audit logs and final statistics of an auditing FAL run.
///
/// Replications without an audit log are skipped.
pub fn confidence_audit(model: &Model, result: &ExperimentResult, table: &GainTable, params: &FalParams) -> AuditReport {
    let horizon = result.settings.horizon;
    let audited: Vec<_> = result
        .replications
        .iter()
        .filter_map(|r| r.audit.as_ref().map(|a| (r, a)))
        .collect();
    let reps = audited.len();
    let slack = 3.0 * (params.delta * (1.0 - params.delta) / reps.max(1) as f64).sqrt();
    let k = table.triplet_count();

    let mut estimate_violating = 0;
    let mut selection_violating = 0;
    let mut selections = 0;
    let mut selection_violations = 0;
    let mut count_checked = 0;
    let mut count_excesses = Vec::new();
    for (rep, log) in &audited {
        selections += log.selections;
        selection_violations += log.selection_violations;
        if log.selections_violated() {
            selection_violating += 1;
        }
        if log.estimates_violated(horizon) {
            estimate_violating += 1;
            continue;
        }
        let Some(stats) = &rep.final_stats else { continue };
        count_checked += 1;
        for e in table.iter() {
            for choice in e.choices().filter(|&c| !e.is_optimal(c)) {
                let gap = e.delta[choice.slot(table.num_actions())].expect("available choice");
                let cap = lemma2_count_bound(gap, params.sigma, k, params.delta);
                let count = stats.n_action(e.stage, e.state, choice);
                if count as f64 > cap {
                    count_excesses.push(CountExcess {
                        replication: rep.replication,
                        stage: e.stage,
                        state: model.states()[e.state].clone(),
                        action: model.choice_name(choice).to_string(),
                        count,
                        cap,
                    });
                }
            }
        }
    }

    let fraction = |n: usize| if reps == 0 { 0.0 } else { n as f64 / reps as f64 };
    AuditReport {
        replications: reps,
        delta: params.delta,
        slack,
        allowed_fraction: params.delta + slack,
        estimate_violating_replications: estimate_violating,
        estimate_violation_fraction: fraction(estimate_violating),
        selection_violating_replications: selection_violating,
        selection_violation_fraction: fraction(selection_violating),
        selections,
        selection_violations,
        count_checked_replications: count_checked,
        count_excesses,
    }
}
