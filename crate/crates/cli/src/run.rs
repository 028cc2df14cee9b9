//! The `run` subcommand: simulation, regret curve, bounds and audit.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use smab_core::analysis::{confidence_audit, expected_regret, theorem_bounds, AuditReport, BoundReport};
use smab_core::engine::{run_experiment, EngineError, ExperimentResult, Policy, RunSettings};
use smab_core::policies::{
    BenchmarkPolicy, CbbPolicy, FalParams, FalPolicy, FixedSequencePolicy, GuidelinePolicy, MaskMode,
};
use smab_core::{GainTable, Model};

use crate::config::{load_env, DeltaMode, ExperimentConfig, LoadedEnv, PolicyConfig, DEFAULT_FAL_SIGMA};
use crate::CliError;

/// Mean cumulative regret at one checkpoint with the bounds that apply to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointRow {
    pub round: usize,
    pub mean_regret: f64,
    /// Absent with a single replication.
    pub stderr: Option<f64>,
    pub thm1: Option<f64>,
    /// Expected-regret bounds for a horizon equal to `round`.
    pub thm2: Option<f64>,
    pub cor2: Option<f64>,
}

pub struct RunOutput {
    pub result: ExperimentResult,
    pub benchmark_value: f64,
    pub fal: Option<FalParams>,
    pub bounds: Option<BoundReport>,
    pub audit: Option<AuditReport>,
    pub rows: Vec<CheckpointRow>,
    /// FAL statistics of the first replication after the last round.
    pub final_stats: Option<Value>,
}

/// FAL parameters after defaults and the δ mode are applied.
pub fn resolve_fal(config: &ExperimentConfig, env: &LoadedEnv) -> Result<Option<FalParams>, CliError> {
    let PolicyConfig::Fal {
        delta,
        sigma,
        epsilon,
        mask,
    } = &config.policy
    else {
        if config.delta_mode == DeltaMode::OneOverN {
            return Err(CliError::Config("--delta-mode one-over-n applies only to the fal policy".into()));
        }
        return Ok(None);
    };
    let delta = match config.delta_mode {
        DeltaMode::Fixed => *delta,
        DeltaMode::OneOverN if config.horizon == 0 => {
            return Err(CliError::Config("δ = 1/n needs a positive horizon".into()))
        }
        DeltaMode::OneOverN => 1.0 / config.horizon as f64,
    };
    let noise = env.spec().noise.sigma;
    let sigma = sigma.unwrap_or(if noise > 0.0 { noise } else { DEFAULT_FAL_SIGMA });
    let mask = mask.unwrap_or(if env.once_per_round() { MaskMode::OncePerRound } else { MaskMode::None });
    let params = FalParams::new(delta, sigma).with_epsilon(*epsilon).with_mask(mask);
    params.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Some(params))
}

type Factory = Box<dyn Fn(usize) -> Box<dyn Policy> + Sync>;

fn policy_factory(
    config: &ExperimentConfig,
    model: &Model,
    table: &Arc<GainTable>,
    fal: Option<FalParams>,
) -> Result<Factory, CliError> {
    let config_error = |e: EngineError| CliError::Config(e.to_string());
    Ok(match &config.policy {
        PolicyConfig::Benchmark => {
            let proto = BenchmarkPolicy::new(Arc::clone(table));
            Box::new(move |_| Box::new(proto.clone()))
        }
        PolicyConfig::Fal { .. } => {
            let params = fal.expect("fal parameters resolved");
            let mut proto = FalPolicy::new(model, params).map_err(config_error)?;
            if config.audit {
                proto = proto.with_audit(Arc::clone(table));
            }
            Box::new(move |_| Box::new(proto.clone()))
        }
        PolicyConfig::Fixed { seq } => {
            let proto = FixedSequencePolicy::from_names(model, seq).map_err(config_error)?;
            Box::new(move |_| Box::new(proto.clone()))
        }
        PolicyConfig::Guideline => {
            let proto = GuidelinePolicy::new(model).map_err(config_error)?;
            Box::new(move |_| Box::new(proto.clone()))
        }
        PolicyConfig::Cbb => {
            let proto = CbbPolicy::new(model);
            Box::new(move |_| Box::new(proto.clone()))
        }
    })
}

fn engine_error(e: EngineError) -> CliError {
    match e {
        EngineError::Config(_) | EngineError::Spec(_) => CliError::Config(e.to_string()),
        other => CliError::Invariant(format!("{other}\n{other:#?}")),
    }
}

/// Runs the experiment a configuration describes.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let env = load_env(&config.env)?;
    let model = env.model();
    let table = env.gain_table();
    let fal = resolve_fal(config, &env)?;
    let factory = policy_factory(config, model, &table, fal)?;
    let settings = RunSettings {
        horizon: config.horizon,
        replications: config.replications,
        seed: config.seed,
        coupling: config.coupling,
        checkpoints: config.checkpoints.clone(),
        jobs: config.jobs,
    };
    let result = match &env {
        LoadedEnv::Plain(m) => run_experiment(m.as_ref(), &table, &settings, factory),
        LoadedEnv::Screening(s) => run_experiment(s.as_ref(), &table, &settings, factory),
    }
    .map_err(engine_error)?;

    let bounds = fal
        .filter(|_| config.horizon > 0)
        .map(|p| theorem_bounds(model, &table, p.sigma, p.delta, Some(config.horizon)));
    let audit = fal
        .filter(|_| config.audit)
        .map(|p| confidence_audit(model, &result, &table, &p));
    let rows = checkpoint_rows(config, model, &table, &result, fal, bounds.as_ref());
    let final_stats = result
        .replications
        .first()
        .and_then(|r| r.final_stats.as_ref())
        .map(|s| s.to_json(model));
    Ok(RunOutput {
        final_stats,
        benchmark_value: table.benchmark_value(model),
        result,
        fal,
        bounds,
        audit,
        rows,
    })
}

fn checkpoint_rows(
    config: &ExperimentConfig,
    model: &Model,
    table: &GainTable,
    result: &ExperimentResult,
    fal: Option<FalParams>,
    bounds: Option<&BoundReport>,
) -> Vec<CheckpointRow> {
    let curve = expected_regret(result).ok();
    let reps = result.replications.len() as f64;
    config
        .checkpoints
        .iter()
        .map(|&round| {
            let mean_regret = match &curve {
                Some(c) => c.at(round),
                None => result.replications.iter().map(|r| r.rounds[round - 1].cumulative_regret).sum::<f64>() / reps,
            };
            let at_round = fal.map(|p| theorem_bounds(model, table, p.sigma, p.delta, Some(round)));
            CheckpointRow {
                round,
                mean_regret,
                stderr: curve.as_ref().map(|c| c.stderr[round - 1]),
                thm1: bounds.map(|b| b.thm1_total),
                thm2: at_round.as_ref().and_then(|b| b.thm2_total),
                cor2: at_round.as_ref().and_then(|b| b.cor2_total),
            }
        })
        .collect()
}

impl RunOutput {
    pub fn summary(&self, config: &ExperimentConfig) -> Value {
        json!({
            "config": config,
            "policy": self.result.policy,
            "fal_params": self.fal,
            "benchmark_value": self.benchmark_value,
            "checkpoints": self.rows,
            "bounds": self.bounds,
            "audit": self.audit,
            "final_stats": self.final_stats,
        })
    }

    /// Side-by-side table of empirical regret and the bounds.
    pub fn table(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>10}  {:>14}  {:>10}  {:>14}  {:>14}  {:>14}",
            "round", "mean regret", "stderr", "thm1", "thm2", "cor2"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>10}  {:>14.2}  {:>10}  {:>14}  {:>14}  {:>14}",
                r.round,
                r.mean_regret,
                cell(r.stderr),
                cell(r.thm1),
                cell(r.thm2),
                cell(r.cor2)
            );
        }
        if let Some(b) = &self.bounds {
            let _ = writeln!(
                out,
                "assumption 2 (single optimal choice where stop is optimal): {}",
                b.assumption_2_satisfied
            );
            let _ = writeln!(out, "assumption 3 (early deviations dominate): {}", b.assumption_3_satisfied);
        }
        if let Some(a) = &self.audit {
            let _ = writeln!(
                out,
                "audit: estimate violations in {}/{} replications, selection violations in {}/{} (allowed fraction {:.4})",
                a.estimate_violating_replications,
                a.replications,
                a.selection_violating_replications,
                a.replications,
                a.allowed_fraction
            );
        }
        out
    }
}
