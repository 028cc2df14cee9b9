//! Replicated learner-versus-benchmark runs.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::environment::{EngineError, Environment};
use super::rng::{Coupling, Lane, RoundStreams};
use super::round::{run_round, Policy};
use crate::analysis::audit::AuditLog;
use crate::analysis::regret::pseudo_regret;
use crate::model::GainTable;
use crate::policies::{BenchmarkPolicy, FalStats};

/// Horizon, replication count and randomness settings of an experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSettings {
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub coupling: Coupling,
    /// Rounds after which the learner's statistics are copied.
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl RunSettings {
    pub fn new(horizon: usize, replications: usize, seed: u64) -> Self {
        Self {
            horizon,
            replications,
            seed,
            coupling: Coupling::Independent,
            checkpoints: Vec::new(),
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.replications == 0 {
            return Err(EngineError::Config("replications must be at least 1".into()));
        }
        if let Some(&c) = self.checkpoints.iter().find(|&&c| c == 0 || c > self.horizon) {
            return Err(EngineError::Config(format!(
                "checkpoint {c} is outside [1, {}]",
                self.horizon
            )));
        }
        if self.jobs == Some(0) {
            return Err(EngineError::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub stop_stage: usize,
    pub pseudo_regret: f64,
    pub cumulative_regret: f64,
    /// Learner's realized terminal reward minus realized costs.
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub replication: usize,
    pub rounds: Vec<RoundRecord>,
    pub snapshots: Vec<(usize, FalStats)>,
    pub final_stats: Option<FalStats>,
    pub audit: Option<AuditLog>,
}

impl ReplicationResult {
    pub fn cumulative_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cumulative_regret)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub policy: String,
    pub settings: RunSettings,
    pub replications: Vec<ReplicationResult>,
}

impl ExperimentResult {
    /// One row per (replication, round), replications in index order.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["replication", "round", "stop_stage", "pseudo_regret", "cumulative_regret"])?;
        for rep in &self.replications {
            for (i, r) in rep.rounds.iter().enumerate() {
                w.write_record([
                    rep.replication.to_string(),
                    (i + 1).to_string(),
                    r.stop_stage.to_string(),
                    r.pseudo_regret.to_string(),
                    r.cumulative_regret.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Mean realized utility per round over the rounds in `range` (1-based,
    /// inclusive), averaged across replications.
    pub fn mean_utility(&self, first: usize, last: usize) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for rep in &self.replications {
            for r in &rep.rounds[first - 1..last] {
                total += r.utility;
                count += 1;
            }
        }
        total / count as f64
    }
}

/// Runs `replications` independent copies of the learner against the
/// benchmark for `horizon` rounds each.
///
/// Regret is the difference of the two trajectories' values at the true
/// means. Replications run in parallel and are merged by index, so the
/// result depends only on the settings and the seed.
pub fn run_experiment<E, F>(
    env: &E,
    table: &Arc<GainTable>,
    settings: &RunSettings,
    make_learner: F,
) -> Result<ExperimentResult, EngineError>
where
    E: Environment,
    F: Fn(usize) -> Box<dyn Policy> + Sync,
{
    settings.validate()?;
    let policy = make_learner(0).name().to_string();
    let run = || -> Result<Vec<ReplicationResult>, EngineError> {
        (0..settings.replications)
            .into_par_iter()
            .map(|rep| run_replication(env, table, settings, rep, make_learner(rep)))
            .collect()
    };
    let replications = match settings.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| EngineError::Config(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    Ok(ExperimentResult {
        policy,
        settings: settings.clone(),
        replications,
    })
}

fn run_replication<E: Environment>(
    env: &E,
    table: &Arc<GainTable>,
    settings: &RunSettings,
    rep: usize,
    mut learner: Box<dyn Policy>,
) -> Result<ReplicationResult, EngineError> {
    let model = env.model();
    let mut benchmark = BenchmarkPolicy::new(Arc::clone(table)).with_mask(env.once_per_round());
    let mut rounds = Vec::with_capacity(settings.horizon);
    let mut snapshots = Vec::new();
    let mut cumulative = 0.0;
    for round in 1..=settings.horizon {
        let learner_streams = RoundStreams::new(settings.seed, rep, round, Lane::Learner);
        let benchmark_streams = match settings.coupling {
            Coupling::Independent => RoundStreams::new(settings.seed, rep, round, Lane::Benchmark),
            Coupling::CommonRandomNumbers => learner_streams,
        };
        let learner_trace = run_round(env, &mut learner, &learner_streams, round)?;
        let benchmark_trace = run_round(env, &mut benchmark, &benchmark_streams, round)?;
        let regret = pseudo_regret(&learner_trace, &benchmark_trace, model);
        cumulative += regret;
        rounds.push(RoundRecord {
            stop_stage: learner_trace.stop_stage(),
            pseudo_regret: regret,
            cumulative_regret: cumulative,
            utility: learner_trace.realized_utility(),
        });
        if settings.checkpoints.contains(&round) {
            if let Some(stats) = learner.snapshot() {
                snapshots.push((round, stats));
            }
        }
    }
    Ok(ReplicationResult {
        replication: rep,
        rounds,
        snapshots,
        final_stats: learner.snapshot(),
        audit: learner.take_audit(),
    })
}
