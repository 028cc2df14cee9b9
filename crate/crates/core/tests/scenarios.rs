mod support;

use std::sync::Arc;

use smab_core::analysis::enumerate_fixed_sequences;
use smab_core::engine::{run_round, Environment, Lane, RoundStreams};
use smab_core::model::INITIAL_STATE;
use smab_core::policies::BenchmarkPolicy;
use smab_core::scenarios::{
    coverage_function, generate_cohort, screening_env, submodular_env, worked_example_env, Observation,
    ScenarioError, ScreeningConfig, BIRADS, MODALITIES, RISK_STATES, SCREENING_STAGES,
};
use smab_core::{compute_gain_table, validate_spec, EnvironmentSpec, Model, NoiseModel};

fn names(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn worked_example_conditionals_rebuild_the_joint_law() {
    let spec = validate_spec(worked_example_env(NoiseModel::none())).unwrap();
    let joint = [(("-1", "-1"), 0.3), (("-1", "1"), 0.2), (("1", "1"), 0.4), (("1", "-1"), 0.1)];
    let index = |f: &str| spec.feedbacks.iter().position(|g| g == f).unwrap();
    let first = &spec.feedback_dist["1"][INITIAL_STATE]["a"];
    for ((f1, f2), p) in joint {
        let x = &spec.state_map["1"][INITIAL_STATE]["a"][f1];
        let second = &spec.feedback_dist["2"][x]["b"];
        let rebuilt = first[index(f1)] * second[index(f2)];
        assert!((rebuilt - p).abs() <= 1e-12, "({f1}, {f2}): {rebuilt} vs {p}");
    }
    assert!((spec.feedback_dist["2"]["(a,1)"]["b"][index("1")] - 0.8).abs() < 1e-12);
    assert_eq!(spec.reward_mean["1"][INITIAL_STATE], 0.0);
    assert!(spec.states.len() <= 1 + 2 * 2 + 4 * 4);
}

#[test]
fn worked_example_headline_values() {
    let model = Model::new(worked_example_env(NoiseModel::none())).unwrap();
    let table = compute_gain_table(&model);
    assert!((table.benchmark_value(&model) - 9.2).abs() < 1e-9);
    let best = &enumerate_fixed_sequences(&model).unwrap()[0];
    assert_eq!(best.names, names(&["a", "b"]));
    assert!((best.value - 9.1).abs() < 1e-9);
}

fn count_on(obs: &Observation) -> f64 {
    obs.iter().filter(|o| **o == Some(true)).count() as f64
}

#[test]
fn modular_benchmark_selects_every_item() {
    let items = names(&["a", "b", "c"]);
    let spec = submodular_env(&items, &[0.5, 0.5, 0.5], &count_on).unwrap();
    assert_eq!(spec.l_max, 4);
    let model = Model::new(spec).unwrap();
    let table = Arc::new(compute_gain_table(&model));
    let mut policy = BenchmarkPolicy::new(table);
    for round in 1..=300 {
        let trace = run_round(&model, &mut policy, &RoundStreams::new(1, 0, round, Lane::Learner), round).unwrap();
        assert_eq!(trace.stop_stage(), model.l_max());
    }
}

#[test]
fn empty_ground_set_stops_at_once() {
    let spec = submodular_env(&[], &[], &|_: &Observation| 2.5).unwrap();
    assert_eq!(spec.l_max, 1);
    assert_eq!(spec.states, vec![INITIAL_STATE.to_string()]);
    let model = Model::new(spec).unwrap();
    let table = compute_gain_table(&model);
    assert_eq!(table.benchmark_value(&model), 2.5);
    let mut policy = BenchmarkPolicy::new(Arc::new(table));
    let trace = run_round(&model, &mut policy, &RoundStreams::new(1, 0, 1, Lane::Learner), 1).unwrap();
    assert_eq!(trace.stop_stage(), 1);
}

#[test]
fn submodular_input_errors() {
    let items = names(&["a", "b"]);
    assert!(matches!(
        submodular_env(&items, &[0.5, 1.5], &count_on),
        Err(ScenarioError::InvalidPrior { value, .. }) if value == 1.5
    ));
    assert!(matches!(submodular_env(&items, &[-0.1, 0.5], &count_on), Err(ScenarioError::InvalidPrior { .. })));
    let many = names(&["a", "b", "c", "d", "e", "f", "g"]);
    assert!(matches!(
        submodular_env(&many, &[0.5; 7], &count_on),
        Err(ScenarioError::TooManyItems { count: 7, .. })
    ));
}

#[test]
fn coverage_benchmark_is_near_optimal() {
    let items = names(&["a", "b"]);
    let h = coverage_function(vec![vec![0, 1], vec![1, 2]], vec![1.0, 3.0, 2.0]);
    let spec = submodular_env(&items, &[0.4, 0.7], &h).unwrap();
    let optimal = support::optimal_value(&spec, 1, INITIAL_STATE);
    let model = Model::new(spec).unwrap();
    let value = compute_gain_table(&model).benchmark_value(&model);
    assert!(value >= (1.0 - (-1f64).exp()) * optimal - 1e-9);
    assert!(value <= optimal + 1e-9);
}

#[test]
fn screening_specs_validate_across_prevalences() {
    for prevalence in [0.001, 0.0268, 0.1, 0.5, 0.9, 0.999] {
        let config = ScreeningConfig {
            prevalence,
            cohort_size: 2000,
            ..ScreeningConfig::default()
        };
        let env = screening_env(&config, 7).unwrap();
        validate_spec(env.spec().clone()).unwrap();
        let malignant = env
            .cohort()
            .iter()
            .filter(|p| p.label == smab_core::policies::Label::Malignant)
            .count();
        assert_eq!(malignant, (prevalence * 2000.0).round() as usize);
    }
    for prevalence in [0.0, 1.0, -0.2, f64::NAN] {
        let config = ScreeningConfig {
            prevalence,
            ..ScreeningConfig::default()
        };
        assert!(matches!(screening_env(&config, 1), Err(ScenarioError::InvalidPrevalence(_))));
    }
}

#[test]
fn screening_structure() {
    let config = ScreeningConfig::default();
    assert_eq!(config.prevalence, 0.0268);
    let env = screening_env(&config, 11).unwrap();
    let spec: &EnvironmentSpec = env.spec();
    assert_eq!(spec.l_max, SCREENING_STAGES);
    assert_eq!(spec.l_max, 4);
    assert_eq!(spec.actions, names(&MODALITIES));
    assert_eq!(spec.feedbacks, names(&BIRADS));
    assert_eq!(spec.states, names(&RISK_STATES));
    assert!(config.costs.mg < config.costs.us && config.costs.mg < config.costs.mr);
    assert!(env.once_per_round());
    for t in 1..spec.l_max {
        for x in RISK_STATES {
            for a in MODALITIES {
                let four = &spec.state_map[&t.to_string()][x][a]["4"];
                assert_eq!(four, "very likely");
            }
        }
    }
}

#[test]
fn cohorts_are_reproducible() {
    let config = ScreeningConfig::default();
    assert_eq!(generate_cohort(&config, 3).unwrap(), generate_cohort(&config, 3).unwrap());
    assert_ne!(generate_cohort(&config, 3).unwrap(), generate_cohort(&config, 4).unwrap());
}
