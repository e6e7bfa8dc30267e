//! Optimizers: the SPSA gradient estimator, switch updating, and the
//! penalty-function baselines.

mod penalty;
mod spsa;
mod switch;
mod trace;

pub use penalty::{
    al_multiplier_update, penalty_value, run_penalty_spsa, run_penalty_spsa_with, PenaltyKind,
    PenaltyOptions, PenaltyState, DEFAULT_DIVERGENCE_BOUND,
};
pub use spsa::{difference_gradient, measure_pair, spsa_gradient_estimate, MeasurementPair};
pub use switch::{run_su, switch_update_model, DEFAULT_PULLBACK_CAP};
pub use trace::{RunTrace, SpsaDraws, StepKind, StepRecord};
