//! Feedback Adaptive Learning.
//!
//! FAL keeps a sample-mean terminal reward for every stage-state pair and a
//! sample-mean gain for every stage-state-action triplet. At each stage it
//! adds a confidence number to every estimate and stops if the stop index is
//! among the largest.
//!
//! An unvisited triplet has an infinite index. Because stop wins ties, FAL
//! stops at stage 1 in its first round and, more generally, stops the first
//! time it reaches any stage-state pair.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::analysis::audit::AuditLog;
use crate::engine::{EngineError, Policy, RoundContext, RoundTrace, Step};
use crate::model::{Choice, GainTable, Model};

/// Whether an action may be repeated within a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskMode {
    #[default]
    None,
    OncePerRound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FalParams {
    pub delta: f64,
    pub sigma: f64,
    /// Bias added to the stop index.
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub mask: MaskMode,
}

impl FalParams {
    pub fn new(delta: f64, sigma: f64) -> Self {
        Self {
            delta,
            sigma,
            epsilon: 0.0,
            mask: MaskMode::None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_mask(mut self, mask: MaskMode) -> Self {
        self.mask = mask;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(EngineError::Config(format!("delta = {} is not in (0, 1)", self.delta)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(EngineError::Config(format!("sigma = {} is not positive", self.sigma)));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(EngineError::Config(format!("epsilon = {} is negative", self.epsilon)));
        }
        Ok(())
    }
}

/// Confidence number for a triplet observed `count` times.
///
/// `sqrt((1 + N) / N² · 4σ² · ln(K √(1 + N) / δ))`, infinite when `N = 0`.
pub fn fal_confidence(count: u64, sigma: f64, delta: f64, k: usize) -> f64 {
    if count == 0 {
        return f64::INFINITY;
    }
    let n = count as f64;
    let log_term = (k as f64 * (1.0 + n).sqrt() / delta).ln();
    ((1.0 + n) / (n * n) * 4.0 * sigma * sigma * log_term).sqrt()
}

/// Counters and sample means kept by FAL.
#[derive(Debug, Clone, PartialEq)]
pub struct FalStats {
    l_max: usize,
    num_states: usize,
    num_actions: usize,
    n_state: Vec<u64>,
    /// `num_actions + 1` slots per pair, stop last.
    n_action: Vec<u64>,
    r_hat: Vec<f64>,
    /// `num_actions` slots per pair; stop reads `r_hat`.
    g_hat: Vec<f64>,
}

impl FalStats {
    pub fn new(model: &Model) -> Self {
        let pairs = model.l_max() * model.num_states();
        Self {
            l_max: model.l_max(),
            num_states: model.num_states(),
            num_actions: model.num_actions(),
            n_state: vec![0; pairs],
            n_action: vec![0; pairs * (model.num_actions() + 1)],
            r_hat: vec![0.0; pairs],
            g_hat: vec![0.0; pairs * model.num_actions()],
        }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// `K = l_max * |X| * |A ∪ {stop}|`.
    pub fn triplet_count(&self) -> usize {
        self.l_max * self.num_states * (self.num_actions + 1)
    }

    fn pair(&self, t: usize, x: usize) -> usize {
        (t - 1) * self.num_states + x
    }

    /// `N_{t,x}`.
    pub fn n_state(&self, t: usize, x: usize) -> u64 {
        self.n_state[self.pair(t, x)]
    }

    /// `N_{t,x,a}`, including the stop counter.
    pub fn n_action(&self, t: usize, x: usize, choice: Choice) -> u64 {
        self.n_action[self.pair(t, x) * (self.num_actions + 1) + choice.slot(self.num_actions)]
    }

    pub fn r_hat(&self, t: usize, x: usize) -> f64 {
        self.r_hat[self.pair(t, x)]
    }

    /// `ĝ_{t,x,a}`; for stop this is `r̂_{t,x}`.
    pub fn g_hat(&self, t: usize, x: usize, choice: Choice) -> f64 {
        match choice {
            Choice::Continue(a) => self.g_hat[self.pair(t, x) * self.num_actions + a],
            Choice::Stop => self.r_hat(t, x),
        }
    }

    /// The counter that drives the confidence number of `choice`: the
    /// action counter for continuation actions, the visit counter for stop.
    pub fn confidence_count(&self, t: usize, x: usize, choice: Choice) -> u64 {
        match choice {
            Choice::Continue(_) => self.n_action(t, x, choice),
            Choice::Stop => self.n_state(t, x),
        }
    }

    pub fn confidence(&self, t: usize, x: usize, choice: Choice, params: &FalParams) -> f64 {
        fal_confidence(
            self.confidence_count(t, x, choice),
            params.sigma,
            params.delta,
            self.triplet_count(),
        )
    }

    /// Absorbs a completed trace and returns the triplets whose estimate or
    /// confidence changed (stop stands for the pair's reward estimate).
    pub fn absorb(&mut self, trace: &RoundTrace) -> Vec<(usize, usize, Choice)> {
        let t_stop = trace.stop_stage();
        let mut touched = Vec::with_capacity(2 * t_stop);
        for t in 1..=t_stop {
            let x = trace.states[t - 1];
            let p = self.pair(t, x);
            self.n_state[p] += 1;
            self.r_hat[p] += (trace.rewards[t - 1] - self.r_hat[p]) / self.n_state[p] as f64;
            touched.push((t, x, Choice::Stop));

            let choice = trace.actions[t - 1];
            let slot = p * (self.num_actions + 1) + choice.slot(self.num_actions);
            self.n_action[slot] += 1;
            if let Choice::Continue(a) = choice {
                let sample = trace.rewards[t] - trace.costs[t - 1];
                let g = &mut self.g_hat[p * self.num_actions + a];
                *g += (sample - *g) / self.n_action[slot] as f64;
                touched.push((t, x, choice));
            }
        }
        touched
    }

    /// Visited pairs keyed by stage, then state, then action.
    pub fn to_json(&self, model: &Model) -> Value {
        let mut stages = Map::new();
        for t in 1..=self.l_max {
            let mut states = Map::new();
            for x in 0..self.num_states {
                if self.n_state(t, x) == 0 {
                    continue;
                }
                let mut actions = Map::new();
                for slot in 0..=self.num_actions {
                    let choice = Choice::from_slot(slot, self.num_actions);
                    let count = self.n_action(t, x, choice);
                    if count > 0 {
                        actions.insert(
                            model.choice_name(choice).to_string(),
                            json!({ "count": count, "g_hat": self.g_hat(t, x, choice) }),
                        );
                    }
                }
                states.insert(
                    model.states()[x].clone(),
                    json!({ "visits": self.n_state(t, x), "r_hat": self.r_hat(t, x), "actions": actions }),
                );
            }
            if !states.is_empty() {
                stages.insert(t.to_string(), Value::Object(states));
            }
        }
        Value::Object(stages)
    }
}

/// Upper confidence index of `choice`, with the stop bias applied.
pub fn fal_index(stats: &FalStats, params: &FalParams, t: usize, x: usize, choice: Choice) -> f64 {
    let bias = if choice.is_stop() { params.epsilon } else { 0.0 };
    stats.g_hat(t, x, choice) + stats.confidence(t, x, choice, params) + bias
}

/// FAL's choice at a stage.
///
/// Stop is taken when its index is at least every eligible continuation
/// index (infinite ties included), at `l_max`, or when no continuation is
/// eligible. Among continuation actions the first maximizer in declaration
/// order wins.
pub fn fal_action(stats: &FalStats, params: &FalParams, step: &Step<'_>) -> Choice {
    let (t, x) = (step.stage, step.state);
    if t >= stats.l_max() {
        return Choice::Stop;
    }
    let stop = fal_index(stats, params, t, x, Choice::Stop);
    let mut best: Option<(usize, f64)> = None;
    for &a in step.available {
        if params.mask == MaskMode::OncePerRound && step.used(a) {
            continue;
        }
        let u = fal_index(stats, params, t, x, Choice::Continue(a));
        if best.is_none_or(|(_, b)| u > b) {
            best = Some((a, u));
        }
    }
    match best {
        Some((a, u)) if u > stop => Choice::Continue(a),
        _ => Choice::Stop,
    }
}

/// FAL as a [`Policy`], optionally auditing its confidence numbers against
/// the true gains.
#[derive(Debug, Clone)]
pub struct FalPolicy {
    stats: FalStats,
    params: FalParams,
    round: usize,
    audit: Option<(Arc<GainTable>, AuditLog)>,
}

impl FalPolicy {
    pub fn new(model: &Model, params: FalParams) -> Result<Self, EngineError> {
        params.validate()?;
        Ok(Self {
            stats: FalStats::new(model),
            params,
            round: 0,
            audit: None,
        })
    }

    /// Records every confidence check against `table`.
    pub fn with_audit(mut self, table: Arc<GainTable>) -> Self {
        self.audit = Some((table, AuditLog::default()));
        self
    }

    pub fn stats(&self) -> &FalStats {
        &self.stats
    }

    pub fn params(&self) -> &FalParams {
        &self.params
    }
}

impl Policy for FalPolicy {
    fn name(&self) -> &str {
        "fal"
    }

    fn begin_round(&mut self, round: usize, _context: &RoundContext) {
        self.round = round;
    }

    fn select(&mut self, step: &Step<'_>) -> Choice {
        let choice = fal_action(&self.stats, &self.params, step);
        if let Some((table, log)) = &mut self.audit {
            let (t, x) = (step.stage, step.state);
            let entry = table.get(t, x).expect("visited pair is tabulated");
            let gap = entry.g_star - entry.gain[choice.slot(table.num_actions())].expect("available choice");
            let width = 2.0 * self.stats.confidence(t, x, choice, &self.params);
            log.record_selection(self.round, t, x, choice, gap, width);
        }
        choice
    }

    fn observe(&mut self, trace: &RoundTrace) {
        let touched = self.stats.absorb(trace);
        if let Some((table, log)) = &mut self.audit {
            for (t, x, choice) in touched {
                let truth = table.gain(t, x, choice).expect("visited triplet is tabulated");
                let deviation = (self.stats.g_hat(t, x, choice) - truth).abs();
                let conf = self.stats.confidence(t, x, choice, &self.params);
                // the updated estimate is the one in force from the next round on
                log.record_estimate(trace.round + 1, t, x, choice, deviation, conf);
            }
        }
    }

    fn snapshot(&self) -> Option<FalStats> {
        Some(self.stats.clone())
    }

    fn take_audit(&mut self) -> Option<AuditLog> {
        self.audit.as_mut().map(|(_, log)| std::mem::take(log))
    }
}
