//! Environment documents, validation, and derived gain quantities.

mod environment;
mod gains;
mod validate;

pub use environment::{
    EnvironmentSpec, Location, NoiseFamily, NoiseModel, PairTable, TripletTable, INITIAL_STATE,
};
pub use gains::{compute_gain_table, GainTable, StateGains, OPTIMALITY_TOLERANCE};
pub use validate::{validate_spec, Choice, Model, SpecError, Transition, NORMALIZATION_TOLERANCE};
