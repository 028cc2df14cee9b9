//! Backward induction for the benchmark value `μ*`, the worst-continuation
//! value `μ_lower` and the deviation gap `Ω`.

use crate::model::{Choice, GainTable, Model};

/// Fills `mu_star`, `mu_lower`, `omega` and the benchmark choice of every
/// tabulated stage-state pair.
///
/// Where the greedy rule leaves several continuation actions tied, the
/// benchmark takes the one with the largest continuation value (first in
/// declaration order on exact ties). Stop wins every tie it is part of.
///
/// The worst continuation minimizes over all choices, stop included, at each
/// later stage.
pub fn compute_values(model: &Model, table: &mut GainTable) {
    let l_max = model.l_max();
    let ns = model.num_states();
    let na = model.num_actions();
    let mut best = vec![f64::NAN; l_max * ns];
    let mut worst = vec![f64::NAN; l_max * ns];
    let at = |t: usize, x: usize| (t - 1) * ns + x;

    for t in (1..=l_max).rev() {
        for x in 0..ns {
            let Some(entry) = table.get(t, x) else { continue };
            let reward = entry.reward;
            let optimal = entry.optimal.clone();

            let continuation = |a: usize, values: &[f64]| -> f64 {
                let tr = model.transition(t, x, a).expect("available triplet");
                let expected: f64 = tr
                    .probabilities
                    .iter()
                    .zip(&tr.successors)
                    .filter(|(p, _)| **p > 0.0)
                    .map(|(p, &next)| p * values[at(t + 1, next)])
                    .sum();
                expected - tr.cost
            };

            let mut mu_lower = vec![None; na + 1];
            mu_lower[na] = Some(reward);
            let mut worst_here = reward;
            for &a in model.available(t, x) {
                let w = continuation(a, &worst);
                mu_lower[a] = Some(w);
                worst_here = worst_here.min(w);
            }

            let (benchmark, mu_star) = if t == l_max || optimal.contains(&Choice::Stop) {
                (Choice::Stop, reward)
            } else {
                let mut pick: Option<(usize, f64)> = None;
                for choice in &optimal {
                    if let Choice::Continue(a) = *choice {
                        let q = continuation(a, &best);
                        if pick.is_none_or(|(_, v)| q > v) {
                            pick = Some((a, q));
                        }
                    }
                }
                let (a, q) = pick.expect("optimal set is nonempty");
                (Choice::Continue(a), q)
            };

            best[at(t, x)] = mu_star;
            worst[at(t, x)] = worst_here;

            let entry = table.get_mut(t, x).expect("tabulated");
            entry.mu_star = mu_star;
            entry.benchmark = benchmark;
            entry.omega = mu_lower.iter().map(|m| m.map(|m| mu_star - m)).collect();
            entry.mu_lower = mu_lower;
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::model::{compute_gain_table, Choice, Model};
    use crate::scenarios::worked_example_env;
    use crate::model::NoiseModel;

    #[test]
    fn benchmark_value_of_worked_example() {
        let model = Model::new(worked_example_env(NoiseModel::none())).unwrap();
        let table = compute_gain_table(&model);
        assert!((table.benchmark_value(&model) - 9.2).abs() < 1e-9);
    }

    #[test]
    fn last_stage_value_is_the_reward() {
        let model = Model::new(worked_example_env(NoiseModel::none())).unwrap();
        let table = compute_gain_table(&model);
        for e in table.iter().filter(|e| e.stage == model.l_max()) {
            assert_eq!(e.mu_star, e.reward);
            assert_eq!(e.benchmark, Choice::Stop);
        }
    }

    #[test]
    fn deviation_gaps_are_nonnegative_and_benchmark_beats_stopping() {
        let model = Model::new(worked_example_env(NoiseModel::none())).unwrap();
        let table = compute_gain_table(&model);
        for e in table.iter() {
            assert!(e.mu_star >= e.reward);
            for w in e.omega.iter().flatten() {
                assert!(*w >= 0.0);
            }
        }
        let x = model.state_id("∅").unwrap();
        let b = model.action_id("b").unwrap();
        // after b every stage-2 state can still pay 1 for a zero-reward stage 3
        let omega_b = table.omega(1, x, Choice::Continue(b)).unwrap();
        assert!((omega_b - (9.2 - (-2.0))).abs() < 1e-9);
    }
}
