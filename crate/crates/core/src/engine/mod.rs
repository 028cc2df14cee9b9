//! Seeded simulation of rounds and experiments.

mod environment;
mod experiment;
pub mod rng;
mod round;
mod trace;

pub use environment::{
    realize_outcomes, sample_feedback, transition, EngineError, Environment, PatientFlags, RoundContext,
};
pub use experiment::{run_experiment, ExperimentResult, ReplicationResult, RoundRecord, RunSettings};
pub use rng::{Coupling, Lane, Purpose, RngStream, RoundStreams, StreamKey};
pub use round::{run_round, Policy, Step};
pub use trace::{Diagnosis, RoundTrace};
