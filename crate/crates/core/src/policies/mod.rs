//! Action-selection strategies.

mod benchmark;
mod cbb;
mod fal;
mod fixed;
mod guideline;
mod predictor;

pub use crate::engine::{Policy, Step};
pub use benchmark::{benchmark_action, BenchmarkPolicy};
pub use cbb::{composite_arms, ucb1_action, ucb1_index, ArmStats, CbbPolicy};
pub use fal::{fal_action, fal_confidence, fal_index, FalParams, FalPolicy, FalStats, MaskMode};
pub use fixed::{fixed_sequence_action, FixedSequencePolicy};
pub use guideline::{guideline_action, guideline_plan, GuidelinePolicy, Modalities};
pub use predictor::{terminal_predict, FrequencyTable, Label, Predictor};
