//! Zone ledgers: sequenced order intake, the quad-tree block book, second-price
//! settlement and token accounting.

mod heat;
mod order;
mod pricing;
mod quadtree;
mod ring;
mod supply;
mod vickrey;
mod zone;

use thiserror::Error;

use crate::agents::AgentId;

pub use heat::HeatMap;
pub use order::{KillReason, Order, OrderKind, Outcome};
pub use pricing::{memory_price, BUFFER_FRACTION};
pub use quadtree::QuadBook;
pub use ring::OrderRing;
pub use supply::{evaporate, TokenBank, TokenSupply};
pub use vickrey::{eviction_check, settle_vickrey, Settlement};
pub use zone::{CellMarket, Incumbent, ZoneLedger, ZoneParams};

/// Indivisible token amounts.
pub type Tokens = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LedgerError {
    #[error("order ring full (capacity {0}), retry next tick")]
    Backpressure(usize),
    #[error("agent {agent} needs {need} tokens but holds {have}")]
    InsufficientFunds {
        agent: AgentId,
        need: Tokens,
        have: Tokens,
    },
    #[error("fill-or-kill quantity {quantity} is not a power of four; round up to {round_up}")]
    MisalignedSku { quantity: u64, round_up: u64 },
    #[error("block of {quantity} leaves exceeds the zone")]
    BlockTooLarge { quantity: u64 },
    #[error("zone side {0} must be a positive power of two")]
    ZoneSide(usize),
    #[error("cell {0} outside the zone")]
    CellOutOfZone(usize),
    #[error("order quantity must be positive")]
    ZeroQuantity,
    #[error("no account for agent {0}")]
    UnknownAccount(AgentId),
    #[error("memory saturated: price is unbounded")]
    Saturated,
    #[error("token conservation violated: {0}")]
    Conservation(String),
    #[error("{0}")]
    Invalid(String),
}
