//! The interface between the round runner and whatever generates feedbacks
//! and outcomes.

use thiserror::Error;

use super::rng::{Purpose, RngStream, RoundStreams};
use super::trace::{Diagnosis, RoundTrace};
use crate::model::{Choice, Location, Model, SpecError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("no feedback distribution at {0}")]
    MissingDistribution(Location),
    #[error("no state mapping entry at {at} for feedback {feedback}")]
    MissingTransition { at: Location, feedback: String },
    #[error("policy contract violated in round {round} at {at}: {reason}")]
    Contract { round: usize, at: Location, reason: String },
    #[error("invalid trace: {0}")]
    Trace(#[from] Diagnosis),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Patient attributes the clinical guideline reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PatientFlags {
    pub dense_breast: bool,
    pub high_risk: bool,
}

/// What a policy may see about a round before it starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundContext {
    pub initial_state: usize,
    pub flags: Option<PatientFlags>,
}

/// A source of feedbacks and realized outcomes.
///
/// `Latent` carries per-round hidden variables, such as a patient's true
/// label, that condition feedbacks and rewards.
pub trait Environment: Sync {
    type Latent;

    fn model(&self) -> &Model;

    fn begin_round(&self, streams: &RoundStreams) -> (RoundContext, Self::Latent);

    fn sample_feedback(
        &self,
        t: usize,
        x: usize,
        a: usize,
        latent: &Self::Latent,
        rng: &mut RngStream,
    ) -> Result<usize, EngineError>;

    /// Fills `costs` and `rewards` of a trace whose actions end in stop.
    fn realize_outcomes(&self, trace: &mut RoundTrace, latent: &Self::Latent, streams: &RoundStreams);

    /// Whether a continuation action may be used at most once per round.
    fn once_per_round(&self) -> bool {
        false
    }
}

/// Draws `f ~ p_{t,x,a}`.
pub fn sample_feedback(model: &Model, t: usize, x: usize, a: usize, rng: &mut RngStream) -> Result<usize, EngineError> {
    let tr = model.transition(t, x, a).ok_or_else(|| EngineError::MissingDistribution(location(model, t, x, Some(a))))?;
    Ok(rng.categorical(&tr.probabilities))
}

/// `φ_t(x, a, f)`.
pub fn transition(model: &Model, t: usize, x: usize, a: usize, f: usize) -> Result<usize, EngineError> {
    model.next_state(t, x, a, f).ok_or_else(|| EngineError::MissingTransition {
        at: location(model, t, x, Some(a)),
        feedback: model.feedbacks().get(f).cloned().unwrap_or_else(|| f.to_string()),
    })
}

/// Adds independent noise to the mean cost of every continuation stage and
/// the mean reward of every visited stage.
pub fn realize_outcomes(model: &Model, trace: &mut RoundTrace, streams: &RoundStreams) {
    let noise = model.noise();
    let t_stop = trace.stop_stage();
    trace.costs = (1..t_stop)
        .map(|t| {
            let Choice::Continue(a) = trace.actions[t - 1] else {
                unreachable!("only the last action is stop")
            };
            let mean = model.cost(t, trace.states[t - 1], a).expect("visited triplet");
            mean + streams.stream(t, Purpose::CostNoise).noise(noise)
        })
        .collect();
    trace.rewards = (1..=t_stop)
        .map(|t| {
            let mean = model.reward(t, trace.states[t - 1]).expect("visited pair");
            mean + streams.stream(t, Purpose::RewardNoise).noise(noise)
        })
        .collect();
}

pub(crate) fn location(model: &Model, t: usize, x: usize, a: Option<usize>) -> Location {
    let state = model.states().get(x).cloned().unwrap_or_else(|| x.to_string());
    match a {
        Some(a) => Location::triplet(
            t.to_string(),
            state,
            model.actions().get(a).cloned().unwrap_or_else(|| a.to_string()),
        ),
        None => Location::pair(t.to_string(), state),
    }
}

/// The environment document itself is an environment: the first state is
/// drawn from the initial distribution, feedbacks from `p_{t,x,a}`, and
/// outcomes are means plus noise.
impl Environment for Model {
    type Latent = ();

    fn model(&self) -> &Model {
        self
    }

    fn begin_round(&self, streams: &RoundStreams) -> (RoundContext, ()) {
        let initial = self.initial();
        let x = if initial.len() == 1 {
            initial[0].0
        } else {
            let weights: Vec<f64> = initial.iter().map(|&(_, p)| p).collect();
            initial[streams.stream(0, Purpose::Start).categorical(&weights)].0
        };
        (
            RoundContext {
                initial_state: x,
                flags: None,
            },
            (),
        )
    }

    fn sample_feedback(&self, t: usize, x: usize, a: usize, _: &(), rng: &mut RngStream) -> Result<usize, EngineError> {
        sample_feedback(self, t, x, a, rng)
    }

    fn realize_outcomes(&self, trace: &mut RoundTrace, _: &(), streams: &RoundStreams) {
        realize_outcomes(self, trace, streams)
    }
}
