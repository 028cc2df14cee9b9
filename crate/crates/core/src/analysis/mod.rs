//! Ground-truth values, regret estimates, bounds and audits.

pub mod audit;
pub mod bounds;
pub mod fixed_sequences;
pub mod regret;
pub mod values;

use thiserror::Error;

pub use audit::{confidence_audit, AuditEvent, AuditLog, AuditReport, CountExcess};
pub use bounds::{lemma2_count_bound, theorem_bounds, BoundReport, CountCap};
pub use fixed_sequences::{enumerate_fixed_sequences, fixed_sequence_count, FixedSequenceValue, ENUMERATION_LIMIT};
pub use regret::{expected_regret, pseudo_regret, CheckpointStat, RegretCurve};
pub use values::compute_values;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("at least 2 replications are needed for a standard error, got {0}")]
    TooFewReplications(usize),
    #[error("{count} fixed sequences exceed the enumeration limit of {limit}")]
    TooManySequences { count: usize, limit: usize },
}
