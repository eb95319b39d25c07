//! The holographic thermo-economic field over the cluster lattice.

mod dual;
mod gpr;
mod gradient;
mod lattice;
mod potential;
pub mod snapshot;

use thiserror::Error;

pub use dual::DualScalar;
pub use gpr::{project_field, GprParams, Sample, MAX_SAMPLES};
pub use gradient::{bilinear, sample_gradient, sample_value, GradientField, BOUNDARY_STIFFNESS};
pub use lattice::{Grid, LatticeDomain, Vec2};
pub use potential::{
    dualize, effective_potential, entropic_price_cap, magnetic_field, FieldState, FieldWeights,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("lattice must be non-empty, got {width}x{height}")]
    EmptyDomain { width: usize, height: usize },
    #[error("grid shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("sample cell {0} outside the domain")]
    CellOutOfDomain(usize),
    #[error("kernel matrix is singular (duplicate samples without noise?)")]
    SingularKernel,
    #[error("{0} samples exceed the dense projection limit")]
    TooManySamples(usize),
    #[error("epoch step must be at least one")]
    ZeroEpochStep,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
}
