//! Experiment configuration files and environment loading.
//!
//! A configuration is a JSON document. Every field is optional in the file
//! so that command-line flags can supply or override it; [`ConfigFile::finish`]
//! checks that the merged result is complete.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smab_core::engine::{Coupling, Environment};
use smab_core::policies::MaskMode;
use smab_core::scenarios::{
    coverage_function, screening_env, submodular_env, worked_example_env, ScreeningConfig, ScreeningEnvironment,
};
use smab_core::{compute_gain_table, EnvironmentSpec, GainTable, Model, NoiseFamily, NoiseModel};

use crate::CliError;

/// Noise of the worked example when none is given.
pub const DEFAULT_NOISE_SIGMA: f64 = 0.5;
/// Cohort seed of the screening scenario when none is given.
pub const DEFAULT_COHORT_SEED: u64 = 2024;
pub const DEFAULT_DELTA: f64 = 0.05;
/// Sub-Gaussian parameter FAL assumes for a noiseless environment.
pub const DEFAULT_FAL_SIGMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    WorkedExample,
    Screening,
    Coverage,
}

/// A monotone weighted-coverage instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageParams {
    pub items: Vec<String>,
    /// Probability that each item is on.
    pub priors: Vec<f64>,
    /// Element indices covered by each item.
    pub covers: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
}

impl Default for CoverageParams {
    fn default() -> Self {
        Self {
            items: vec!["a".into(), "b".into(), "c".into()],
            priors: vec![0.5, 0.6, 0.7],
            covers: vec![vec![0, 1], vec![1, 2], vec![0, 2, 3]],
            weights: vec![1.0, 2.0, 3.0, 4.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    pub name: ScenarioName,
    /// Outcome noise of the worked example.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screening: Option<ScreeningConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohort_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageParams>,
}

impl ScenarioParams {
    pub fn named(name: ScenarioName) -> Self {
        Self {
            name,
            noise: None,
            screening: None,
            cohort_seed: None,
            coverage: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvSource {
    Inline(Box<EnvironmentSpec>),
    File(PathBuf),
    Scenario(Box<ScenarioParams>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicyConfig {
    Benchmark,
    Fal {
        #[serde(default = "default_delta")]
        delta: f64,
        /// Defaults to the environment's noise level, or 0.5 without noise.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
        #[serde(default)]
        epsilon: f64,
        /// Defaults to once-per-round masking when the environment forbids
        /// repeated actions.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mask: Option<MaskMode>,
    },
    Fixed {
        seq: Vec<String>,
    },
    Guideline,
    Cbb,
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaMode {
    /// Use the configured δ.
    #[default]
    Fixed,
    /// δ = 1/n for the expected-regret guarantee.
    OneOverN,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

/// A configuration as read from disk, before flags are applied.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub env: Option<EnvSource>,
    pub policy: Option<PolicyConfig>,
    #[serde(alias = "n")]
    pub horizon: Option<usize>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub coupling: Option<Coupling>,
    pub checkpoints: Option<Vec<usize>>,
    pub delta_mode: Option<DeltaMode>,
    pub audit: Option<bool>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub output: OutputPaths,
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub env: EnvSource,
    pub policy: PolicyConfig,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub coupling: Coupling,
    pub checkpoints: Vec<usize>,
    pub delta_mode: DeltaMode,
    /// Record confidence-audit events during FAL runs.
    pub audit: bool,
    #[serde(skip)]
    pub jobs: Option<usize>,
    #[serde(skip)]
    pub output: OutputPaths,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn finish(self) -> Result<ExperimentConfig, CliError> {
        let missing = |what: &str| CliError::Config(format!("no {what} given in the configuration or on the command line"));
        let horizon = self.horizon.ok_or_else(|| missing("horizon (--n)"))?;
        let replications = self.replications.unwrap_or(1);
        if replications == 0 {
            return Err(CliError::Config("replications must be at least 1".into()));
        }
        let checkpoints = match self.checkpoints {
            Some(c) => c,
            None => default_checkpoints(horizon),
        };
        if let Some(&c) = checkpoints.iter().find(|&&c| c == 0 || c > horizon) {
            return Err(CliError::Config(format!("checkpoint {c} is outside [1, {horizon}]")));
        }
        Ok(ExperimentConfig {
            env: self.env.ok_or_else(|| missing("environment (--env or --scenario)"))?,
            policy: self.policy.unwrap_or(PolicyConfig::Fal {
                delta: DEFAULT_DELTA,
                sigma: None,
                epsilon: 0.0,
                mask: None,
            }),
            horizon,
            replications,
            seed: self.seed.ok_or_else(|| missing("seed (--seed)"))?,
            coupling: self.coupling.unwrap_or_default(),
            checkpoints,
            delta_mode: self.delta_mode.unwrap_or_default(),
            audit: self.audit.unwrap_or(true),
            jobs: self.jobs,
            output: self.output,
        })
    }
}

/// Powers of ten below the horizon, and the horizon itself.
pub fn default_checkpoints(horizon: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 10;
    while p < horizon {
        out.push(p);
        p *= 10;
    }
    if horizon > 0 {
        out.push(horizon);
    }
    out
}

pub(crate) fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// An environment ready for simulation.
pub enum LoadedEnv {
    Plain(Box<Model>),
    Screening(Box<ScreeningEnvironment>),
}

impl LoadedEnv {
    pub fn model(&self) -> &Model {
        match self {
            LoadedEnv::Plain(m) => m,
            LoadedEnv::Screening(env) => env.model(),
        }
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        self.model().spec()
    }

    pub fn once_per_round(&self) -> bool {
        match self {
            LoadedEnv::Plain(m) => m.once_per_round(),
            LoadedEnv::Screening(env) => env.once_per_round(),
        }
    }

    pub fn gain_table(&self) -> Arc<GainTable> {
        Arc::new(compute_gain_table(self.model()))
    }
}

/// Builds the environment a source refers to.
pub fn load_env(source: &EnvSource) -> Result<LoadedEnv, CliError> {
    let spec = match source {
        EnvSource::Inline(spec) => (**spec).clone(),
        EnvSource::File(path) => {
            EnvironmentSpec::from_json(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        EnvSource::Scenario(params) => return load_scenario(params),
    };
    Model::new(spec)
        .map(|m| LoadedEnv::Plain(Box::new(m)))
        .map_err(|e| CliError::Config(e.to_string()))
}

fn load_scenario(params: &ScenarioParams) -> Result<LoadedEnv, CliError> {
    let spec = match params.name {
        ScenarioName::WorkedExample => {
            worked_example_env(params.noise.unwrap_or(NoiseModel::gaussian(DEFAULT_NOISE_SIGMA)))
        }
        ScenarioName::Screening => {
            let config = params.screening.clone().unwrap_or_default();
            let seed = params.cohort_seed.unwrap_or(DEFAULT_COHORT_SEED);
            let env = screening_env(&config, seed).map_err(|e| CliError::Config(e.to_string()))?;
            return Ok(LoadedEnv::Screening(Box::new(env)));
        }
        ScenarioName::Coverage => {
            let c = params.coverage.clone().unwrap_or_default();
            if c.covers.len() != c.items.len() {
                return Err(CliError::Config(format!(
                    "{} cover lists for {} items",
                    c.covers.len(),
                    c.items.len()
                )));
            }
            if let Some(&e) = c.covers.iter().flatten().find(|&&e| e >= c.weights.len()) {
                return Err(CliError::Config(format!("covered element {e} has no weight")));
            }
            let h = coverage_function(c.covers, c.weights);
            submodular_env(&c.items, &c.priors, &h).map_err(|e| CliError::Config(e.to_string()))?
        }
    };
    Model::new(spec)
        .map(|m| LoadedEnv::Plain(Box::new(m)))
        .map_err(|e| CliError::Config(e.to_string()))
}

/// Scenario noise from optional command-line parts.
pub fn noise_from_flags(sigma: Option<f64>, family: Option<NoiseFamily>) -> Option<NoiseModel> {
    match (sigma, family) {
        (None, None) => None,
        (s, f) => {
            let sigma = s.unwrap_or(DEFAULT_NOISE_SIGMA);
            Some(match f.unwrap_or(NoiseFamily::Gaussian) {
                NoiseFamily::Gaussian => NoiseModel::gaussian(sigma),
                NoiseFamily::BoundedUniform => NoiseModel::bounded_uniform(sigma),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_checkpoints_are_decades_and_horizon() {
        assert_eq!(default_checkpoints(0), Vec::<usize>::new());
        assert_eq!(default_checkpoints(5), vec![5]);
        assert_eq!(default_checkpoints(10_000), vec![10, 100, 1000, 10_000]);
        assert_eq!(default_checkpoints(2500), vec![10, 100, 1000, 2500]);
    }

    #[test]
    fn policy_parses_with_defaults() {
        let p: PolicyConfig = serde_json::from_str(r#"{"kind": "fal"}"#).unwrap();
        assert_eq!(
            p,
            PolicyConfig::Fal {
                delta: DEFAULT_DELTA,
                sigma: None,
                epsilon: 0.0,
                mask: None
            }
        );
        let p: PolicyConfig = serde_json::from_str(r#"{"kind": "fixed", "seq": ["a", "b"]}"#).unwrap();
        assert_eq!(p, PolicyConfig::Fixed { seq: vec!["a".into(), "b".into()] });
    }

    #[test]
    fn incomplete_config_is_rejected() {
        let file: ConfigFile = serde_json::from_str(r#"{"env": {"scenario": {"name": "worked-example"}}, "n": 10}"#).unwrap();
        assert!(matches!(file.finish(), Err(CliError::Config(m)) if m.contains("seed")));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"horizn": 10}"#).is_err());
    }
}
