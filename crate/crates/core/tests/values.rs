mod support;

use proptest::prelude::*;
use smab_core::model::INITIAL_STATE;
use smab_core::scenarios::worked_example_env;
use smab_core::{compute_gain_table, Choice, EnvironmentSpec, Model, NoiseModel};

/// Checks `μ*` and `μ_lower` of the library against policy enumeration.
fn check_against_enumeration(spec: &EnvironmentSpec) {
    let model = Model::new(spec.clone()).unwrap();
    let table = compute_gain_table(&model);
    let mu_star = support::mu_star_oracle(spec);
    let mu_lower = support::mu_lower_oracle(spec);
    for e in table.iter() {
        let x = &model.states()[e.state];
        let want = mu_star[&(e.stage, x.clone())];
        assert!((e.mu_star - want).abs() <= 1e-9, "μ* at ({}, {x}): {} vs {want}", e.stage, e.mu_star);
        for &a in model.available(e.stage, e.state) {
            let name = &model.actions()[a];
            let want = mu_lower[&(e.stage, x.clone(), name.clone())];
            let got = e.mu_lower[a].unwrap();
            assert!((got - want).abs() <= 1e-9, "μ_lower at ({}, {x}, {name}): {got} vs {want}", e.stage);
            let omega = e.omega[a].unwrap();
            assert!((omega - (e.mu_star - got)).abs() <= 1e-12);
        }
    }
}

#[test]
fn worked_example_matches_enumeration() {
    let spec = worked_example_env(NoiseModel::none());
    check_against_enumeration(&spec);
    let model = Model::new(spec).unwrap();
    let table = compute_gain_table(&model);
    assert!((table.benchmark_value(&model) - 9.2).abs() < 1e-9);
    let root = model.state_id(INITIAL_STATE).unwrap();
    let b = model.action_id("b").unwrap();
    assert!((table.omega(1, root, Choice::Continue(b)).unwrap() - 11.2).abs() < 1e-9);
}

#[test]
fn random_environments_match_enumeration() {
    for seed in 0..30 {
        check_against_enumeration(&support::random_env(1000 + seed, seed % 3 == 0));
    }
}

#[test]
fn benchmark_value_is_the_greedy_policy_value() {
    // The benchmark value equals the value of the best greedy-consistent
    // policy, which can fall short of the best adaptive policy.
    let spec = worked_example_env(NoiseModel::none());
    let optimal = support::optimal_value(&spec, 1, INITIAL_STATE);
    let model = Model::new(spec).unwrap();
    let table = compute_gain_table(&model);
    assert!(table.benchmark_value(&model) <= optimal + 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn values_are_ordered(seed in any::<u64>(), coarse in any::<bool>()) {
        let model = Model::new(support::random_env(seed, coarse)).unwrap();
        let table = compute_gain_table(&model);
        let mut omega_max: f64 = 0.0;
        for e in table.iter() {
            prop_assert!(e.mu_star >= e.reward - 1e-12);
            if e.stage == model.l_max() {
                prop_assert_eq!(e.mu_star, e.reward);
            }
            for w in e.omega.iter().flatten() {
                prop_assert!(*w >= -1e-12);
                omega_max = omega_max.max(*w);
            }
        }
        prop_assert_eq!(table.omega_max(), omega_max);
    }
}
