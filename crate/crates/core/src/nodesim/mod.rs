//! Per-node memory semantics: leasing, glassy throttling, zram sealing and the
//! airlock evacuation.

mod airlock;
mod node;

use thiserror::Error;

use crate::agents::AgentId;

pub use airlock::{run_airlock, select_weak, AirlockReport, AirlockStage, CHECKPOINT_RATE};
pub use node::{
    compressed_size, CgroupMode, ExpandOutcome, NodeEvent, NodeEventKind, NodeState, Resident,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NodeError {
    #[error("agent {0} is not resident")]
    UnknownResident(AgentId),
    #[error("agent {0} is already resident")]
    AlreadyResident(AgentId),
    #[error("need {need} units but only {free} are free")]
    NoRoom { need: u64, free: u64 },
    #[error("checkpoint of {size} exceeds the {buffer}-unit buffer")]
    CheckpointTooLarge { size: u64, buffer: u64 },
    #[error("weak and strong must be distinct residents")]
    SameAgent,
    #[error("expansion delta must be positive")]
    ZeroDelta,
    #[error("node capacity must be positive")]
    ZeroCapacity,
}
