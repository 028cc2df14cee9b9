//! Ready-made environments.

mod screening;
mod submodular;
mod worked_example;

use thiserror::Error;

use crate::model::SpecError;

pub use screening::{
    generate_cohort, screening_env, state_after_score, EmissionPair, Emissions, ModalityCosts, OutcomeRewards, Patient,
    PredictorKind, RiskFactor, ScreeningConfig, ScreeningEnvironment, BIRADS, MODALITIES, RISK_STATES,
    SCREENING_STAGES,
};
pub use submodular::{coverage_function, observation_name, submodular_env, Observation, MAX_ITEMS};
pub use worked_example::worked_example_env;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("prevalence must lie in (0, 1), got {0}")]
    InvalidPrevalence(f64),
    #[error("probability {value} for `{item}` is outside [0, 1]")]
    InvalidPrior { item: String, value: f64 },
    #[error("{count} items exceed the limit of {max}")]
    TooManyItems { count: usize, max: usize },
    #[error("invalid scenario configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
}
