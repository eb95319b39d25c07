//! Macro controller for the global damping coefficient.

mod controller;
mod hocbf;
mod landau;
mod phase;
mod telemetry;

use thiserror::Error;

pub use controller::{governor_tick, Governor, GovernorParams, GovernorRecord, GovernorState};
pub use hocbf::{barrier, hocbf_filter, plant_step, plant_step_driven, HocbfParams};
pub use landau::{landau_free_energy, landau_gamma, LandauParams};
pub use phase::{classify_phase, subsidy_drive, MacroPhase, PhaseThresholds};
pub use telemetry::{entropy_production, reynolds, reynolds_with_length, MacroTelemetry, NU0};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GovernorError {
    #[error("an epoch needs at least one micro-batch")]
    EmptyEpoch,
    #[error("telemetry must be finite and non-negative: {0:?}")]
    InvalidTelemetry(MacroTelemetry),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
