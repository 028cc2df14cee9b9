//! Staged multi-armed bandits.
//!
//! A round is a sequence of stages. At each stage the learner picks a
//! continuation action, observes a feedback that moves it to a new state, and
//! eventually takes the stop action. Costs and terminal rewards are revealed
//! only once the round has stopped.
//!
//! The crate is split into:
//!
//! - [`model`]: environment documents, validation and the gain table;
//! - [`engine`]: seeded round and experiment execution;
//! - [`policies`]: the greedy benchmark, FAL and baseline strategies;
//! - [`analysis`]: benchmark values, regret estimates, closed-form bounds and
//!   confidence audits;
//! - [`scenarios`]: ready-made environments.

pub mod analysis;
pub mod engine;
pub mod model;
pub mod policies;
pub mod scenarios;

pub use model::{compute_gain_table, validate_spec, Choice, EnvironmentSpec, GainTable, Model, NoiseFamily, NoiseModel, SpecError};
