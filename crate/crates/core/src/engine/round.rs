//! Policy interface and the single-round driver.

use super::environment::{location, Environment, EngineError, RoundContext};
use super::rng::{Purpose, RoundStreams};
use super::trace::RoundTrace;
use crate::analysis::audit::AuditLog;
use crate::model::Choice;
use crate::policies::FalStats;

/// What a policy sees when asked for an action.
#[derive(Debug, Clone, Copy)]
pub struct Step<'a> {
    pub stage: usize,
    pub state: usize,
    /// Continuation actions defined at `(stage, state)`, in declaration order.
    pub available: &'a [usize],
    /// Actions already taken this round.
    pub history: &'a [Choice],
    pub context: &'a RoundContext,
}

impl Step<'_> {
    /// Whether `a` was already used this round.
    pub fn used(&self, a: usize) -> bool {
        self.history.contains(&Choice::Continue(a))
    }
}

/// An action-selection strategy.
///
/// `select` is called only at stages where a continuation is possible; the
/// runner forces stop at `l_max` and wherever no action is defined.
pub trait Policy: Send {
    fn name(&self) -> &str;

    fn begin_round(&mut self, _round: usize, _context: &RoundContext) {}

    fn select(&mut self, step: &Step<'_>) -> Choice;

    /// Receives the completed trace with realized outcomes.
    fn observe(&mut self, _trace: &RoundTrace) {}

    /// Copy of the learner's internal statistics, if it keeps any.
    fn snapshot(&self) -> Option<FalStats> {
        None
    }

    /// Confidence audit records accumulated so far.
    fn take_audit(&mut self) -> Option<AuditLog> {
        None
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn begin_round(&mut self, round: usize, context: &RoundContext) {
        (**self).begin_round(round, context)
    }

    fn select(&mut self, step: &Step<'_>) -> Choice {
        (**self).select(step)
    }

    fn observe(&mut self, trace: &RoundTrace) {
        (**self).observe(trace)
    }

    fn snapshot(&self) -> Option<FalStats> {
        (**self).snapshot()
    }

    fn take_audit(&mut self) -> Option<AuditLog> {
        (**self).take_audit()
    }
}

/// Plays one round: asks the policy for actions until it stops or the round
/// reaches `l_max`, realizes outcomes, and hands the trace to the policy.
pub fn run_round<E, P>(env: &E, policy: &mut P, streams: &RoundStreams, round: usize) -> Result<RoundTrace, EngineError>
where
    E: Environment + ?Sized,
    P: Policy + ?Sized,
{
    let model = env.model();
    let (context, latent) = env.begin_round(streams);
    policy.begin_round(round, &context);
    let mut trace = RoundTrace::new(round, context.initial_state);

    for t in 1.. {
        let x = trace.terminal_state();
        let available = model.available(t, x);
        if t >= model.l_max() || available.is_empty() {
            trace.actions.push(Choice::Stop);
            break;
        }
        let choice = policy.select(&Step {
            stage: t,
            state: x,
            available,
            history: &trace.actions,
            context: &context,
        });
        let Choice::Continue(a) = choice else {
            trace.actions.push(Choice::Stop);
            break;
        };
        let violation = if !available.contains(&a) {
            Some("action is not available here")
        } else if env.once_per_round() && trace.actions.contains(&choice) {
            Some("action already used this round")
        } else {
            None
        };
        if let Some(reason) = violation {
            return Err(EngineError::Contract {
                round,
                at: location(model, t, x, Some(a)),
                reason: reason.to_string(),
            });
        }
        let f = env.sample_feedback(t, x, a, &latent, &mut streams.stream(t, Purpose::Feedback))?;
        let next = super::environment::transition(model, t, x, a, f)?;
        trace.actions.push(choice);
        trace.feedbacks.push(f);
        trace.states.push(next);
    }

    env.realize_outcomes(&mut trace, &latent, streams);
    if cfg!(debug_assertions) {
        trace.check(model)?;
    }
    policy.observe(&trace);
    Ok(trace)
}
