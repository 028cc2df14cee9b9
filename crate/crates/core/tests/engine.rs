use std::sync::Arc;

use smab_core::engine::{
    realize_outcomes, run_experiment, run_round, sample_feedback, transition, Coupling, EngineError, Environment,
    Lane, Policy, Purpose, RngStream, RoundContext, RoundStreams, RoundTrace, RunSettings, Step,
};
use smab_core::model::INITIAL_STATE;
use smab_core::policies::{BenchmarkPolicy, FalParams, FalPolicy, FixedSequencePolicy};
use smab_core::scenarios::{screening_env, state_after_score, worked_example_env, ScreeningConfig, RISK_STATES};
use smab_core::{compute_gain_table, Choice, EnvironmentSpec, Model, NoiseModel};

fn worked(noise: NoiseModel) -> Model {
    Model::new(worked_example_env(noise)).unwrap()
}

fn stream(seed: u64, round: usize, purpose: Purpose) -> RngStream {
    RoundStreams::new(seed, 0, round, Lane::Learner).stream(1, purpose)
}

fn frequency_of_one(model: &Model, t: usize, x: &str, a: &str, draws: usize) -> f64 {
    let (x, a) = (model.state_id(x).unwrap(), model.action_id(a).unwrap());
    let one = model.feedback_id("1").unwrap();
    let mut rng = stream(17, 1, Purpose::Feedback);
    let hits = (0..draws)
        .filter(|_| sample_feedback(model, t, x, a, &mut rng).unwrap() == one)
        .count();
    hits as f64 / draws as f64
}

#[test]
fn feedback_frequencies_follow_the_law() {
    let model = worked(NoiseModel::none());
    let p = frequency_of_one(&model, 1, INITIAL_STATE, "a", 100_000);
    assert!((p - 0.5).abs() <= 0.01, "{p}");
    let p = frequency_of_one(&model, 2, "(a,1)", "b", 100_000);
    assert!((p - 0.8).abs() <= 0.01, "{p}");
    let p = frequency_of_one(&model, 2, "(a,-1)", "b", 100_000);
    assert!((p - 0.4).abs() <= 0.01, "{p}");
}

#[test]
fn point_mass_always_yields_its_feedback() {
    let mut spec = worked_example_env(NoiseModel::none());
    spec.set_transition(1, INITIAL_STATE, "a", vec![0.0, 1.0], &["(a,-1)", "(a,1)"], 1.0);
    let model = Model::new(spec).unwrap();
    let (x, a) = (model.state_id(INITIAL_STATE).unwrap(), model.action_id("a").unwrap());
    let mut rng = stream(3, 1, Purpose::Feedback);
    for _ in 0..1000 {
        assert_eq!(sample_feedback(&model, 1, x, a, &mut rng).unwrap(), 1);
    }
}

#[test]
fn transitions_follow_the_state_map() {
    let model = worked(NoiseModel::none());
    let (root, a) = (model.state_id(INITIAL_STATE).unwrap(), model.action_id("a").unwrap());
    let one = model.feedback_id("1").unwrap();
    assert_eq!(transition(&model, 1, root, a, one).unwrap(), model.state_id("(a,1)").unwrap());

    // a map sending everything back to the initial state
    let mut spec = EnvironmentSpec::empty(3, vec![INITIAL_STATE.into()], vec!["u".into()], vec!["p".into(), "q".into()]);
    spec.c_max = 1.0;
    spec.r_max = 1.0;
    for t in 1..=3 {
        spec.set_reward(t, INITIAL_STATE, 0.5);
    }
    for t in 1..3 {
        spec.set_transition(t, INITIAL_STATE, "u", vec![0.5, 0.5], &[INITIAL_STATE, INITIAL_STATE], 0.0);
    }
    let model = Model::new(spec).unwrap();
    for t in 1..3 {
        for f in 0..2 {
            assert_eq!(transition(&model, t, 0, 0, f).unwrap(), 0);
        }
    }
}

#[test]
fn screening_scores_map_to_risk_states() {
    let expected = ["very unlikely", "unlikely", "likely", "very likely", "very likely", "very likely"];
    for (score, name) in expected.iter().enumerate() {
        assert_eq!(RISK_STATES[state_after_score(score + 1)], *name);
    }
    let env = screening_env(&ScreeningConfig::default(), 5).unwrap();
    let model = env.model();
    let mg = model.action_id("MG").unwrap();
    for x in 0..RISK_STATES.len() {
        assert_eq!(transition(model, 1, x, mg, 0).unwrap(), model.state_id("very unlikely").unwrap());
    }
}

fn trace_of(model: &Model, names: &[&str], feedbacks: &[usize]) -> RoundTrace {
    let mut trace = RoundTrace::new(1, model.state_id(INITIAL_STATE).unwrap());
    for (t, (name, &f)) in names.iter().zip(feedbacks).enumerate() {
        let a = model.action_id(name).unwrap();
        let x = trace.terminal_state();
        trace.actions.push(Choice::Continue(a));
        trace.feedbacks.push(f);
        trace.states.push(model.next_state(t + 1, x, a, f).unwrap());
    }
    trace.actions.push(Choice::Stop);
    trace
}

#[test]
fn noiseless_outcomes_are_the_means() {
    let model = worked(NoiseModel::none());
    let mut trace = trace_of(&model, &["a", "b"], &[0, 1]);
    realize_outcomes(&model, &mut trace, &RoundStreams::new(1, 0, 1, Lane::Learner));
    assert_eq!(trace.costs, vec![1.0, 1.0]);
    assert_eq!(trace.rewards, vec![0.0, 0.0, 10.0]);
    trace.check(&model).unwrap();
}

#[test]
fn gaussian_reward_noise_is_centered() {
    let model = worked(NoiseModel::gaussian(1.0));
    let base = trace_of(&model, &["a", "b"], &[1, 1]);
    let rounds = 100_000;
    let mut sum = 0.0;
    for round in 1..=rounds {
        let mut trace = base.clone();
        realize_outcomes(&model, &mut trace, &RoundStreams::new(2, 0, round, Lane::Learner));
        sum += trace.rewards[2];
    }
    let mean = sum / rounds as f64;
    assert!((mean - 13.0).abs() <= 0.02, "{mean}");
}

#[test]
fn bounded_uniform_noise_stays_within_sigma() {
    let model = worked(NoiseModel::bounded_uniform(1.0));
    let base = trace_of(&model, &["a"], &[1]);
    for round in 1..=10_000 {
        let mut trace = base.clone();
        realize_outcomes(&model, &mut trace, &RoundStreams::new(4, 0, round, Lane::Learner));
        assert!((trace.costs[0] - 1.0).abs() <= 1.0);
        assert!((trace.rewards[1] - 12.0).abs() <= 1.0);
    }
}

/// The worked example with the first feedback fixed.
struct ForcedFirstFeedback {
    model: Model,
    feedback: usize,
}

impl Environment for ForcedFirstFeedback {
    type Latent = ();

    fn model(&self) -> &Model {
        &self.model
    }

    fn begin_round(&self, streams: &RoundStreams) -> (RoundContext, ()) {
        self.model.begin_round(streams)
    }

    fn sample_feedback(&self, t: usize, x: usize, a: usize, _: &(), rng: &mut RngStream) -> Result<usize, EngineError> {
        if t == 1 {
            Ok(self.feedback)
        } else {
            sample_feedback(&self.model, t, x, a, rng)
        }
    }

    fn realize_outcomes(&self, trace: &mut RoundTrace, _: &(), streams: &RoundStreams) {
        realize_outcomes(&self.model, trace, streams)
    }
}

#[test]
fn benchmark_follows_the_narrative() {
    let model = worked(NoiseModel::none());
    let (a, b) = (model.action_id("a").unwrap(), model.action_id("b").unwrap());
    let table = Arc::new(compute_gain_table(&model));
    for (feedback, want) in [
        ("1", vec![Choice::Continue(a), Choice::Stop]),
        ("-1", vec![Choice::Continue(a), Choice::Continue(b), Choice::Stop]),
    ] {
        let env = ForcedFirstFeedback {
            feedback: model.feedback_id(feedback).unwrap(),
            model: model.clone(),
        };
        let mut policy = BenchmarkPolicy::new(Arc::clone(&table));
        for round in 1..=50 {
            let trace = run_round(&env, &mut policy, &RoundStreams::new(9, 0, round, Lane::Learner), round).unwrap();
            assert_eq!(trace.actions, want);
            assert_eq!(trace.stop_stage(), want.len());
        }
    }
}

#[test]
fn single_stage_rounds_stop_at_once() {
    let mut spec = EnvironmentSpec::empty(1, vec![INITIAL_STATE.into()], vec!["a".into()], vec!["f".into()]);
    spec.r_max = 3.0;
    spec.set_reward(1, INITIAL_STATE, 3.0);
    let model = Model::new(spec).unwrap();
    let mut policy = FalPolicy::new(&model, FalParams::new(0.1, 1.0)).unwrap();
    let trace = run_round(&model, &mut policy, &RoundStreams::new(1, 0, 1, Lane::Learner), 1).unwrap();
    assert_eq!(trace.actions, vec![Choice::Stop]);
    assert_eq!(trace.stop_stage(), 1);
    assert_eq!(trace.rewards, vec![3.0]);
}

/// Always asks for the same action.
struct Stubborn(usize);

impl Policy for Stubborn {
    fn name(&self) -> &str {
        "stubborn"
    }

    fn select(&mut self, _: &Step<'_>) -> Choice {
        Choice::Continue(self.0)
    }
}

#[test]
fn contract_violations_are_errors() {
    let env = screening_env(&ScreeningConfig::default(), 1).unwrap();
    let mut policy = Stubborn(0);
    let err = run_round(&env, &mut policy, &RoundStreams::new(1, 0, 1, Lane::Learner), 1).unwrap_err();
    assert!(matches!(err, EngineError::Contract { ref reason, .. } if reason.contains("already used")));

    let model = worked(NoiseModel::none());
    let mut policy = Stubborn(7);
    let err = run_round(&model, &mut policy, &RoundStreams::new(1, 0, 1, Lane::Learner), 1).unwrap_err();
    assert!(matches!(err, EngineError::Contract { .. }));
}

#[test]
fn traces_satisfy_their_invariants() {
    let model = worked(NoiseModel::gaussian(0.5));
    let mut policy = FalPolicy::new(&model, FalParams::new(0.1, 0.5)).unwrap();
    for round in 1..=2000 {
        let trace = run_round(&model, &mut policy, &RoundStreams::new(5, 0, round, Lane::Learner), round).unwrap();
        trace.check(&model).unwrap();
        assert_eq!(trace.costs.len() + 1, trace.stop_stage());
        assert_eq!(trace.rewards.len(), trace.stop_stage());
    }
}

fn fal_factory(model: &Model) -> impl Fn(usize) -> Box<dyn Policy> + Sync + '_ {
    move |_| Box::new(FalPolicy::new(model, FalParams::new(0.1, 0.5)).unwrap())
}

#[test]
fn empty_horizon_gives_empty_curves() {
    let model = worked(NoiseModel::gaussian(0.5));
    let table = Arc::new(compute_gain_table(&model));
    let result = run_experiment(&model, &table, &RunSettings::new(0, 3, 1), fal_factory(&model)).unwrap();
    assert_eq!(result.replications.len(), 3);
    assert!(result.replications.iter().all(|r| r.rounds.is_empty()));
}

#[test]
fn coupled_self_comparison_has_zero_regret() {
    let model = worked(NoiseModel::gaussian(0.5));
    let table = Arc::new(compute_gain_table(&model));
    let mut settings = RunSettings::new(500, 4, 11);
    settings.coupling = Coupling::CommonRandomNumbers;
    let t = Arc::clone(&table);
    let result = run_experiment(&model, &table, &settings, move |_| Box::new(BenchmarkPolicy::new(Arc::clone(&t)))).unwrap();
    for rep in &result.replications {
        assert!(rep.rounds.iter().all(|r| r.pseudo_regret == 0.0));
        assert_eq!(rep.cumulative_regret(), 0.0);
    }
}

#[test]
fn coupled_identical_policies_give_identical_traces() {
    let model = worked(NoiseModel::gaussian(0.5));
    let mut p = FixedSequencePolicy::from_names(&model, &["a", "b"]).unwrap();
    let mut q = p.clone();
    for round in 1..=200 {
        let streams = RoundStreams::new(21, 2, round, Lane::Learner);
        let u = run_round(&model, &mut p, &streams, round).unwrap();
        let v = run_round(&model, &mut q, &streams, round).unwrap();
        assert_eq!(u, v);
    }
}

#[test]
fn experiments_are_deterministic() {
    let model = worked(NoiseModel::gaussian(0.5));
    let table = Arc::new(compute_gain_table(&model));
    let mut settings = RunSettings::new(300, 6, 99);
    settings.checkpoints = vec![100, 300];
    let first = run_experiment(&model, &table, &settings, fal_factory(&model)).unwrap();
    settings.jobs = Some(1);
    let second = run_experiment(&model, &table, &settings, fal_factory(&model)).unwrap();
    let csv = |r: &smab_core::engine::ExperimentResult| {
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        out
    };
    assert_eq!(csv(&first), csv(&second));
    for (a, b) in first.replications.iter().zip(&second.replications) {
        assert_eq!(a.rounds, b.rounds);
        assert_eq!(a.snapshots.len(), 2);
        assert_eq!(a.final_stats, b.final_stats);
    }
    let other = run_experiment(&model, &table, &RunSettings::new(300, 6, 100), fal_factory(&model)).unwrap();
    assert_ne!(csv(&first), csv(&other));
}

#[test]
fn csv_layout_is_fixed() {
    let model = worked(NoiseModel::none());
    let table = Arc::new(compute_gain_table(&model));
    let result = run_experiment(&model, &table, &RunSettings::new(3, 2, 1), fal_factory(&model)).unwrap();
    let mut out = Vec::new();
    result.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "replication,round,stop_stage,pseudo_regret,cumulative_regret");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1].starts_with("0,1,"));
    assert!(lines[6].starts_with("1,3,"));
}

#[test]
fn invalid_settings_are_rejected() {
    let model = worked(NoiseModel::none());
    let table = Arc::new(compute_gain_table(&model));
    let mut settings = RunSettings::new(10, 0, 1);
    assert!(run_experiment(&model, &table, &settings, fal_factory(&model)).is_err());
    settings.replications = 1;
    settings.checkpoints = vec![11];
    assert!(run_experiment(&model, &table, &settings, fal_factory(&model)).is_err());
}

#[test]
fn screening_rounds_start_from_the_patient_risk_level() {
    let env = screening_env(&ScreeningConfig::default(), 8).unwrap();
    for round in 1..=200 {
        let streams = RoundStreams::new(8, 0, round, Lane::Learner);
        let (context, patient) = env.begin_round(&streams);
        let p = &env.cohort()[patient];
        assert_eq!(context.initial_state, p.risk_level());
        assert_eq!(context.flags, Some(p.flags()));
    }
}
