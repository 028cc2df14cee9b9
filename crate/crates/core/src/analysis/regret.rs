//! Pseudo-regret of a round and Monte-Carlo regret curves.

use serde::Serialize;

use super::AnalysisError;
use crate::engine::{ExperimentResult, RoundTrace};
use crate::model::Model;

/// Benchmark trajectory value minus learner trajectory value, both taken at
/// the true mean rewards and costs along the realized paths.
pub fn pseudo_regret(learner: &RoundTrace, benchmark: &RoundTrace, model: &Model) -> f64 {
    benchmark.mean_utility(model) - learner.mean_utility(model)
}

/// Mean cumulative regret across replications with its standard error,
/// indexed by round (entry `i` is round `i + 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretCurve {
    pub replications: usize,
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckpointStat {
    pub round: usize,
    pub mean: f64,
    pub stddev: f64,
    pub stderr: f64,
}

impl RegretCurve {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Mean cumulative regret after `round` rounds; zero before the first.
    pub fn at(&self, round: usize) -> f64 {
        if round == 0 {
            0.0
        } else {
            self.mean[round - 1]
        }
    }

    /// Mean regret accumulated over rounds `(from, to]`.
    pub fn window(&self, from: usize, to: usize) -> f64 {
        self.at(to) - self.at(from)
    }

    pub fn checkpoints(&self, rounds: &[usize]) -> Vec<CheckpointStat> {
        rounds
            .iter()
            .map(|&round| CheckpointStat {
                round,
                mean: self.mean[round - 1],
                stddev: self.stddev[round - 1],
                stderr: self.stderr[round - 1],
            })
            .collect()
    }
}

/// Monte-Carlo estimate of the expected cumulative regret curve.
pub fn expected_regret(result: &ExperimentResult) -> Result<RegretCurve, AnalysisError> {
    let reps = result.replications.len();
    if reps < 2 {
        return Err(AnalysisError::TooFewReplications(reps));
    }
    let horizon = result.settings.horizon;
    let mut mean = Vec::with_capacity(horizon);
    let mut stddev = Vec::with_capacity(horizon);
    let mut stderr = Vec::with_capacity(horizon);
    for i in 0..horizon {
        let values = result.replications.iter().map(|r| r.rounds[i].cumulative_regret);
        let m = values.clone().sum::<f64>() / reps as f64;
        let var = values.map(|v| (v - m) * (v - m)).sum::<f64>() / (reps - 1) as f64;
        mean.push(m);
        stddev.push(var.sqrt());
        stderr.push((var / reps as f64).sqrt());
    }
    Ok(RegretCurve {
        replications: reps,
        mean,
        stddev,
        stderr,
    })
}
