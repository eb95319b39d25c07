use serde::{Deserialize, Serialize};

use super::Tokens;
use crate::agents::AgentId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    Bid,
    FokBlock,
    Release,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    /// Stamped by the ring on submit; zero before that.
    pub seq: u64,
    pub agent_id: AgentId,
    pub kind: OrderKind,
    /// Target cell for bids, block root cell for releases, unused for FOK.
    pub cell: Option<usize>,
    pub quantity: u64,
    /// Tokens per unit.
    pub limit_price: Tokens,
    pub is_virtual: bool,
}

impl Order {
    pub fn bid(agent_id: AgentId, cell: usize, quantity: u64, limit_price: Tokens) -> Self {
        Self {
            seq: 0,
            agent_id,
            kind: OrderKind::Bid,
            cell: Some(cell),
            quantity,
            limit_price,
            is_virtual: false,
        }
    }

    pub fn fok(agent_id: AgentId, quantity: u64, limit_price: Tokens) -> Self {
        Self {
            seq: 0,
            agent_id,
            kind: OrderKind::FokBlock,
            cell: None,
            quantity,
            limit_price,
            is_virtual: false,
        }
    }

    pub fn release(agent_id: AgentId, cell: usize, quantity: u64) -> Self {
        Self {
            seq: 0,
            agent_id,
            kind: OrderKind::Release,
            cell: Some(cell),
            quantity,
            limit_price: 0,
            is_virtual: false,
        }
    }

    pub fn into_virtual(mut self) -> Self {
        self.is_virtual = true;
        self
    }

    /// Heat contributed to the target cell: limit times quantity.
    pub fn value(&self) -> f64 {
        self.limit_price as f64 * self.quantity as f64
    }

    /// Funds locked at submit for a real order.
    pub fn escrow_amount(&self, c_txn: Tokens) -> Tokens {
        match self.kind {
            OrderKind::Release => 0,
            _ if self.is_virtual => 0,
            _ => self
                .limit_price
                .saturating_mul(self.quantity)
                .saturating_add(c_txn),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KillReason {
    Outbid,
    BelowReserve,
    NoCapacity,
    NoFreeBlock,
    NotOwner,
}

/// Result of processing one order at a clearing boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Filled {
        seq: u64,
        agent: AgentId,
        cell: usize,
        quantity: u64,
        price: Tokens,
        second_price: Tokens,
        burned: Tokens,
    },
    /// Incumbent displaced by the winner `by` of the same cell.
    Evicted {
        agent: AgentId,
        cell: usize,
        by: AgentId,
    },
    BlockFilled {
        seq: u64,
        agent: AgentId,
        level: u32,
        root: usize,
        price: Tokens,
        burned: Tokens,
    },
    Released {
        seq: u64,
        agent: AgentId,
        cell: usize,
        quantity: u64,
    },
    Killed {
        seq: u64,
        agent: AgentId,
        reason: KillReason,
    },
    Probe {
        seq: u64,
        agent: AgentId,
        cell: usize,
        would_fill: bool,
        quote: Tokens,
    },
}

impl Outcome {
    pub fn agent(&self) -> AgentId {
        match *self {
            Outcome::Filled { agent, .. }
            | Outcome::Evicted { agent, .. }
            | Outcome::BlockFilled { agent, .. }
            | Outcome::Released { agent, .. }
            | Outcome::Killed { agent, .. }
            | Outcome::Probe { agent, .. } => agent,
        }
    }

    pub fn burned(&self) -> Tokens {
        match *self {
            Outcome::Filled { burned, .. } | Outcome::BlockFilled { burned, .. } => burned,
            _ => 0,
        }
    }
}
