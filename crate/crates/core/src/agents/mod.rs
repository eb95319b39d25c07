//! Langevin workload agents.

mod bidding;
mod dynamics;
mod init;
mod physics;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dualfield::Vec2;
use crate::ledger::Tokens;

pub use bidding::{
    jit_bid_stride, jit_expand_decision, probe_wealth, HoldReason, JitDecision, JitPolicy,
};
pub use dynamics::{step_langevin, ForceField};
pub use init::init_agents;
pub use physics::{agent_charge, agent_mass, MIN_MASS};

pub type AgentId = u64;

/// Static description of a workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSpec {
    pub mem_size: u64,
    pub e_init: Tokens,
    pub sla_prio: f64,
    pub risk_factor: f64,
    /// Memory units of additional need per epoch once seated.
    pub consumption_rate: f64,
    /// Seated epochs before the workload completes.
    pub lifetime: u64,
}

impl Default for AgentSpec {
    fn default() -> Self {
        Self {
            mem_size: 8,
            e_init: 100,
            sla_prio: 1.0,
            risk_factor: 0.0,
            consumption_rate: 1.0,
            lifetime: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Flight,
    Seated,
    Glassy,
    Frozen,
    Suspended,
    Evacuating,
    Terminated,
}

impl Phase {
    /// Phases in which the agent may hold a node lease.
    pub fn may_hold_footprint(self) -> bool {
        matches!(
            self,
            Phase::Seated | Phase::Glassy | Phase::Frozen | Phase::Suspended
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Flight => "flight",
            Phase::Seated => "seated",
            Phase::Glassy => "glassy",
            Phase::Frozen => "frozen",
            Phase::Suspended => "suspended",
            Phase::Evacuating => "evacuating",
            Phase::Terminated => "terminated",
        }
    }
}

/// Mutable state of one workload particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub pos: Vec2,
    pub vel: Vec2,
    pub mass: f64,
    pub charge: f64,
    pub wallet: Tokens,
    pub footprint: u64,
    pub phase: Phase,
}

impl AgentState {
    pub fn new(id: AgentId, spec: &AgentSpec, params: &DynamicsParams, pos: Vec2) -> Self {
        Self {
            id,
            pos,
            vel: Vec2::ZERO,
            mass: agent_mass(spec, params),
            charge: agent_charge(spec),
            wallet: spec.e_init,
            footprint: 0,
            phase: Phase::Flight,
        }
    }

    /// Moves to `next` unless the agent is already terminated.
    pub fn transition(&mut self, next: Phase) -> Result<(), AgentError> {
        if self.phase == Phase::Terminated && next != Phase::Terminated {
            return Err(AgentError::Terminated(self.id));
        }
        self.phase = next;
        Ok(())
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass * self.vel.norm_sq()
    }
}

/// Integrator and physical-property coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsParams {
    pub alpha_m: f64,
    pub beta_m: f64,
    /// Total drag seen by flying agents.
    pub gamma: f64,
    pub temperature: f64,
    pub dt: f64,
    /// Horizon, in epochs, of the dual-number field extrapolation.
    pub lookahead: f64,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            alpha_m: 0.1,
            beta_m: 0.2,
            gamma: 1.0,
            temperature: 0.0,
            dt: 0.01,
            lookahead: 1.0,
        }
    }
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.dt > 0.0 && self.temperature >= 0.0 && self.lookahead >= 0.0 {
            Ok(())
        } else {
            Err(AgentError::InvalidParameter(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("agent {0} is not in flight")]
    NotInFlight(AgentId),
    #[error("agent {0} is terminated")]
    Terminated(AgentId),
    #[error("non-finite state for agent {id}: pos={pos:?} vel={vel:?}")]
    NonFinite { id: AgentId, pos: Vec2, vel: Vec2 },
    #[error("holding tax must be positive")]
    ZeroHoldingTax,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
