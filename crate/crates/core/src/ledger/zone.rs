use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    eviction_check, settle_vickrey, KillReason, LedgerError, Order, OrderKind, OrderRing, Outcome,
    QuadBook, TokenBank, Tokens,
};
use crate::agents::AgentId;

/// Resident that a winning bid could displace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incumbent {
    pub agent: AgentId,
    pub mass: f64,
    /// Per-unit price the incumbent paid.
    pub price: Tokens,
}

/// Node-side view the ledger needs to clear per-cell bids.
pub trait CellMarket {
    /// Per-unit reserve floor for the cell.
    fn reserve(&self, cell: usize) -> Tokens;
    /// Per-unit price cap, if any.
    fn cap(&self, cell: usize) -> Option<Tokens>;
    fn admits(&self, cell: usize, agent: AgentId, quantity: u64) -> bool;
    /// Resident whose removal would make room for `quantity`.
    fn incumbent(&self, cell: usize, quantity: u64) -> Option<Incumbent>;
    fn evict(&mut self, cell: usize, agent: AgentId);
    fn fill(&mut self, cell: usize, agent: AgentId, quantity: u64, price: Tokens);
    /// Returns false when the agent holds nothing there.
    fn release(&mut self, cell: usize, agent: AgentId, quantity: u64) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZoneParams {
    pub side: usize,
    pub ring_capacity: usize,
    pub c_txn: Tokens,
    pub mu_friction: f64,
}

impl Default for ZoneParams {
    fn default() -> Self {
        Self {
            side: 8,
            ring_capacity: 1024,
            c_txn: 1,
            mu_friction: 0.1,
        }
    }
}

/// One shared-nothing zone: ring, block book and clearing state.
#[derive(Debug, Clone)]
pub struct ZoneLedger {
    zone_id: usize,
    params: ZoneParams,
    book: QuadBook,
    ring: OrderRing,
    clearing_price: Vec<Option<Tokens>>,
    burned: Tokens,
    escrow: BTreeMap<u64, Tokens>,
    blocks: BTreeMap<usize, (AgentId, u32)>,
}

impl ZoneLedger {
    pub fn new(zone_id: usize, params: ZoneParams) -> Result<Self, LedgerError> {
        let book = QuadBook::new(params.side)?;
        let cells = book.cells();
        if params.ring_capacity == 0 {
            return Err(LedgerError::Invalid("ring capacity must be positive".into()));
        }
        Ok(Self {
            zone_id,
            params,
            book,
            ring: OrderRing::new(params.ring_capacity),
            clearing_price: vec![None; cells],
            burned: 0,
            escrow: BTreeMap::new(),
            blocks: BTreeMap::new(),
        })
    }

    pub fn zone_id(&self) -> usize {
        self.zone_id
    }

    pub fn params(&self) -> &ZoneParams {
        &self.params
    }

    pub fn book(&self) -> &QuadBook {
        &self.book
    }

    pub fn burned(&self) -> Tokens {
        self.burned
    }

    pub fn cells(&self) -> usize {
        self.book.cells()
    }

    pub fn clearing_price(&self, cell: usize) -> Option<Tokens> {
        self.clearing_price.get(cell).copied().flatten()
    }

    pub fn pending(&self) -> impl Iterator<Item = &Order> {
        self.ring.iter()
    }

    pub fn pending_escrow(&self) -> Tokens {
        self.escrow.values().sum()
    }

    /// Owner and level of the block rooted at `cell`.
    pub fn block_owner(&self, cell: usize) -> Option<(AgentId, u32)> {
        self.blocks.get(&cell).copied()
    }

    /// Validates, escrows and enqueues an order; returns its sequence number.
    pub fn submit(&mut self, order: Order, bank: &mut TokenBank) -> Result<u64, LedgerError> {
        if order.quantity == 0 {
            return Err(LedgerError::ZeroQuantity);
        }
        if let Some(c) = order.cell {
            if c >= self.cells() {
                return Err(LedgerError::CellOutOfZone(c));
            }
        }
        match order.kind {
            OrderKind::FokBlock => {
                self.book.sku_level(order.quantity)?;
            }
            OrderKind::Bid | OrderKind::Release if order.cell.is_none() => {
                return Err(LedgerError::Invalid("bid and release need a cell".into()));
            }
            _ => {}
        }
        if self.ring.len() >= self.ring.capacity() {
            return Err(LedgerError::Backpressure(self.ring.capacity()));
        }
        let amount = order.escrow_amount(self.params.c_txn);
        if amount > 0 {
            bank.escrow(order.agent_id, amount)?;
        }
        let seq = self.ring.push(order)?;
        if amount > 0 {
            self.escrow.insert(seq, amount);
        }
        Ok(seq)
    }

    fn take_escrow(&mut self, seq: u64) -> Tokens {
        self.escrow.remove(&seq).unwrap_or(0)
    }

    fn refund(&mut self, o: &Order, bank: &mut TokenBank) -> Result<(), LedgerError> {
        let amt = self.take_escrow(o.seq);
        bank.refund(o.agent_id, amt)
    }

    /// Pays `cost` out of the order's escrow and refunds the rest.
    fn pay(&mut self, o: &Order, cost: Tokens, bank: &mut TokenBank) -> Result<(), LedgerError> {
        let held = self.take_escrow(o.seq);
        if cost > held {
            return Err(LedgerError::Conservation(format!(
                "seq {} owes {cost} but escrowed {held}",
                o.seq
            )));
        }
        bank.burn_escrow(o.agent_id, cost)?;
        bank.refund(o.agent_id, held - cost)?;
        self.burned += cost;
        Ok(())
    }

    /// Drains the ring and clears everything queued this tick.
    ///
    /// Releases and block orders are applied in seq order, then probes are
    /// answered against the pre-clearing state, then each cell's bids are
    /// settled in ascending cell order.
    pub fn clear(
        &mut self,
        bank: &mut TokenBank,
        market: &mut impl CellMarket,
    ) -> Result<Vec<Outcome>, LedgerError> {
        let orders: Vec<Order> = self.ring.drain().collect();
        let mut out = Vec::new();
        let mut bids: BTreeMap<usize, Vec<Order>> = BTreeMap::new();
        let mut probes = Vec::new();
        for o in orders {
            match o.kind {
                OrderKind::Release => out.push(self.apply_release(&o, market)),
                OrderKind::FokBlock if o.is_virtual => {
                    let level = self.book.sku_level(o.quantity)?;
                    let root = self.book.find_free_block(level);
                    let quote = root.map_or(0, |(bx, by)| self.block_reserve(level, bx, by, market));
                    out.push(Outcome::Probe {
                        seq: o.seq,
                        agent: o.agent_id,
                        cell: root.map_or(0, |(bx, by)| self.root_cell(level, bx, by)),
                        would_fill: root.is_some() && o.limit_price > 0 && o.limit_price >= quote,
                        quote,
                    });
                }
                OrderKind::FokBlock => out.push(self.apply_fok(&o, bank, market)?),
                OrderKind::Bid if o.is_virtual => probes.push(o),
                OrderKind::Bid => bids.entry(o.cell.unwrap_or(0)).or_default().push(o),
            }
        }
        for p in probes {
            let cell = p.cell.unwrap_or(0);
            let cap = market.cap(cell);
            let reserve = cap.map_or(market.reserve(cell), |c| market.reserve(cell).min(c));
            let would_fill = p.limit_price > 0
                && p.limit_price >= reserve
                && market.admits(cell, p.agent_id, p.quantity);
            out.push(Outcome::Probe {
                seq: p.seq,
                agent: p.agent_id,
                cell,
                would_fill,
                quote: reserve,
            });
        }
        for (cell, group) in bids {
            self.settle_cell(cell, &group, bank, market, &mut out)?;
        }
        Ok(out)
    }

    fn settle_cell(
        &mut self,
        cell: usize,
        group: &[Order],
        bank: &mut TokenBank,
        market: &mut impl CellMarket,
        out: &mut Vec<Outcome>,
    ) -> Result<(), LedgerError> {
        let settled = settle_vickrey(group, market.reserve(cell), market.cap(cell));
        let Some(s) = settled else {
            for o in group {
                self.refund(o, bank)?;
                out.push(Outcome::Killed {
                    seq: o.seq,
                    agent: o.agent_id,
                    reason: KillReason::BelowReserve,
                });
            }
            return Ok(());
        };
        let mut admitted = market.admits(cell, s.winner, s.quantity);
        if !admitted {
            if let Some(inc) = market.incumbent(cell, s.quantity) {
                if inc.agent != s.winner
                    && eviction_check(
                        s.winner_limit as f64,
                        inc.price as f64,
                        inc.mass,
                        self.params.mu_friction,
                    )
                {
                    market.evict(cell, inc.agent);
                    out.push(Outcome::Evicted {
                        agent: inc.agent,
                        cell,
                        by: s.winner,
                    });
                    admitted = market.admits(cell, s.winner, s.quantity);
                }
            }
        }
        for o in group {
            if o.seq == s.seq && admitted {
                let cost = s.price.saturating_mul(s.quantity) + self.params.c_txn;
                self.pay(o, cost, bank)?;
                market.fill(cell, s.winner, s.quantity, s.price);
                self.clearing_price[cell] = Some(s.price);
                out.push(Outcome::Filled {
                    seq: o.seq,
                    agent: o.agent_id,
                    cell,
                    quantity: s.quantity,
                    price: s.price,
                    second_price: s.second_price,
                    burned: cost,
                });
            } else {
                self.refund(o, bank)?;
                let reason = if o.seq == s.seq {
                    KillReason::NoCapacity
                } else {
                    KillReason::Outbid
                };
                out.push(Outcome::Killed {
                    seq: o.seq,
                    agent: o.agent_id,
                    reason,
                });
            }
        }
        Ok(())
    }

    fn root_cell(&self, level: u32, bx: usize, by: usize) -> usize {
        let span = 1usize << level;
        by * span * self.book.side() + bx * span
    }

    fn block_reserve(&self, level: u32, bx: usize, by: usize, market: &impl CellMarket) -> Tokens {
        self.book
            .block_cells(level, bx, by)
            .into_iter()
            .map(|c| {
                let r = market.reserve(c);
                market.cap(c).map_or(r, |cap| r.min(cap))
            })
            .max()
            .unwrap_or(0)
    }

    fn apply_fok(
        &mut self,
        o: &Order,
        bank: &mut TokenBank,
        market: &impl CellMarket,
    ) -> Result<Outcome, LedgerError> {
        let level = self.book.sku_level(o.quantity)?;
        let Some((bx, by)) = self.book.find_free_block(level) else {
            self.refund(o, bank)?;
            return Ok(Outcome::Killed {
                seq: o.seq,
                agent: o.agent_id,
                reason: KillReason::NoFreeBlock,
            });
        };
        let price = self.block_reserve(level, bx, by, market);
        if o.limit_price == 0 || o.limit_price < price {
            self.refund(o, bank)?;
            return Ok(Outcome::Killed {
                seq: o.seq,
                agent: o.agent_id,
                reason: KillReason::BelowReserve,
            });
        }
        let cost = price.saturating_mul(o.quantity) + self.params.c_txn;
        self.pay(o, cost, bank)?;
        self.book.occupy_block(level, bx, by)?;
        let root = self.root_cell(level, bx, by);
        self.blocks.insert(root, (o.agent_id, level));
        Ok(Outcome::BlockFilled {
            seq: o.seq,
            agent: o.agent_id,
            level,
            root,
            price,
            burned: cost,
        })
    }

    fn apply_release(&mut self, o: &Order, market: &mut impl CellMarket) -> Outcome {
        let cell = o.cell.unwrap_or(0);
        let killed = Outcome::Killed {
            seq: o.seq,
            agent: o.agent_id,
            reason: KillReason::NotOwner,
        };
        if let Some(&(owner, level)) = self.blocks.get(&cell) {
            if owner == o.agent_id && o.quantity == 1u64 << (2 * level) {
                let s = self.book.side();
                let span = 1usize << level;
                let (bx, by) = ((cell % s) / span, (cell / s) / span);
                if self.book.release_block(level, bx, by).is_ok() {
                    self.blocks.remove(&cell);
                    return Outcome::Released {
                        seq: o.seq,
                        agent: o.agent_id,
                        cell,
                        quantity: o.quantity,
                    };
                }
            }
        }
        if market.release(cell, o.agent_id, o.quantity) {
            Outcome::Released {
                seq: o.seq,
                agent: o.agent_id,
                cell,
                quantity: o.quantity,
            }
        } else {
            killed
        }
    }
}
