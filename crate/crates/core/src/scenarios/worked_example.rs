//! A three-stage treatment example with two actions.
//!
//! States are full histories, written `(a,1)` after one stage and
//! `(a,b),(1,-1)` after two. Every action costs 1. Only the history `(a, b)`
//! has nonzero rewards at stage 3, and its feedbacks are correlated: after
//! `(a, 1)` action `b` returns 1 with probability 0.8, after `(a, -1)` with
//! probability 0.4.

use crate::model::{EnvironmentSpec, NoiseModel, INITIAL_STATE};

const ACTIONS: [&str; 2] = ["a", "b"];
/// Feedback alphabet in declaration order.
const FEEDBACKS: [&str; 2] = ["-1", "1"];

fn stage2(a: &str, f: &str) -> String {
    format!("({a},{f})")
}

fn stage3(a1: &str, a2: &str, f1: &str, f2: &str) -> String {
    format!("({a1},{a2}),({f1},{f2})")
}

/// Joint law of the two feedbacks of `(a, b)`: (f1, f2) -> probability.
const JOINT_AB: [(&str, &str, f64); 4] = [("-1", "-1", 0.3), ("-1", "1", 0.2), ("1", "1", 0.4), ("1", "-1", 0.1)];

/// `P(f2 = 1 | f1)` for the second action `b` after `a`, by conditioning
/// the joint law on the first feedback.
fn conditional_b_after_a(f1: &str) -> f64 {
    let marginal: f64 = JOINT_AB.iter().filter(|(g, _, _)| *g == f1).map(|(_, _, p)| p).sum();
    let both: f64 = JOINT_AB
        .iter()
        .filter(|(g, h, _)| *g == f1 && *h == "1")
        .map(|(_, _, p)| p)
        .sum();
    both / marginal
}

fn stage3_reward(a1: &str, a2: &str, f1: &str, f2: &str) -> f64 {
    match (a1, a2, f1, f2) {
        ("a", "b", "1", "1") => 13.0,
        ("a", "b", "1", "-1") => 12.0,
        ("a", "b", "-1", "1") => 10.0,
        ("a", "b", "-1", "-1") => 9.0,
        _ => 0.0,
    }
}

/// Builds the example with the given outcome noise.
pub fn worked_example_env(noise: NoiseModel) -> EnvironmentSpec {
    let mut states = vec![INITIAL_STATE.to_string()];
    for a in ACTIONS {
        for f in FEEDBACKS.iter().rev() {
            states.push(stage2(a, f));
        }
    }
    for a1 in ACTIONS {
        for a2 in ACTIONS {
            for f1 in FEEDBACKS.iter().rev() {
                for f2 in FEEDBACKS.iter().rev() {
                    states.push(stage3(a1, a2, f1, f2));
                }
            }
        }
    }
    let mut spec = EnvironmentSpec::empty(
        3,
        states,
        ACTIONS.iter().map(|s| s.to_string()).collect(),
        FEEDBACKS.iter().map(|s| s.to_string()).collect(),
    );
    spec.c_max = 1.0;
    spec.r_max = 13.0;
    spec.noise = noise;

    spec.set_reward(1, INITIAL_STATE, 0.0);
    for a in ACTIONS {
        let successors: Vec<String> = FEEDBACKS.iter().map(|f| stage2(a, f)).collect();
        let successors: Vec<&str> = successors.iter().map(String::as_str).collect();
        spec.set_transition(1, INITIAL_STATE, a, vec![0.5, 0.5], &successors, 1.0);
    }

    for a1 in ACTIONS {
        for f1 in FEEDBACKS {
            let x = stage2(a1, f1);
            let reward = match (a1, f1) {
                ("a", "1") => 12.0,
                ("b", "1") => 6.0,
                _ => 0.0,
            };
            spec.set_reward(2, &x, reward);
            for a2 in ACTIONS {
                let p1 = if (a1, a2) == ("a", "b") { conditional_b_after_a(f1) } else { 0.5 };
                let successors: Vec<String> = FEEDBACKS.iter().map(|f2| stage3(a1, a2, f1, f2)).collect();
                let successors: Vec<&str> = successors.iter().map(String::as_str).collect();
                spec.set_transition(2, &x, a2, vec![1.0 - p1, p1], &successors, 1.0);
                for f2 in FEEDBACKS {
                    spec.set_reward(3, &stage3(a1, a2, f1, f2), stage3_reward(a1, a2, f1, f2));
                }
            }
        }
    }
    spec
}
