use teg_core::agents::AgentId;
use teg_core::dualfield::{entropic_price_cap, FieldWeights};
use teg_core::ledger::{memory_price, CellMarket, Incumbent, Tokens};
use teg_core::nodesim::{CgroupMode, NodeEvent, NodeState};

/// Reserve quoted for a saturated node; no wallet reaches it.
pub const SATURATED_RESERVE: Tokens = 1 << 40;

/// Posted per-unit price of a node, `ceil(k / (0.95 c - u))`.
pub fn node_reserve(node: &NodeState, k_mem: f64) -> Tokens {
    let u = (node.resident_total() + node.zram_total()) as f64;
    match memory_price(u, node.c_total() as f64, k_mem) {
        Ok(p) => (p.ceil() as Tokens).clamp(1, SATURATED_RESERVE),
        Err(_) => SATURATED_RESERVE,
    }
}

/// Maps zone-local cell indices onto the global lattice.
#[derive(Debug, Clone, Copy)]
pub struct ZoneMap {
    pub width: usize,
    pub per_side: usize,
    pub side: usize,
}

impl ZoneMap {
    pub fn zones(&self) -> usize {
        self.per_side * self.per_side
    }

    /// `(zone, local cell)` of a global cell.
    pub fn locate(&self, cell: usize) -> (usize, usize) {
        let (x, y) = (cell % self.width, cell / self.width);
        let zone = (y / self.side) * self.per_side + x / self.side;
        let local = (y % self.side) * self.side + x % self.side;
        (zone, local)
    }

    pub fn global(&self, zone: usize, local: usize) -> usize {
        let (zx, zy) = (zone % self.per_side, zone / self.per_side);
        let (lx, ly) = (local % self.side, local / self.side);
        (zy * self.side + ly) * self.width + zx * self.side + lx
    }
}

/// Seat bookkeeping the market needs from the agent table.
pub trait SeatInfo {
    fn mass(&self, agent: AgentId) -> f64;
    fn paid(&self, agent: AgentId) -> Tokens;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarketAction {
    Filled { agent: AgentId, node: usize, quantity: u64 },
    Evicted { agent: AgentId, node: usize },
    Released { agent: AgentId, node: usize },
}

/// One zone's view of the node fleet during clearing.
pub struct NodeMarket<'a, S: SeatInfo> {
    pub zone: usize,
    pub map: ZoneMap,
    pub nodes: &'a mut [NodeState],
    pub seats: &'a S,
    /// Physical entropy per global cell, for the price cap.
    pub s_phys: &'a [f64],
    pub weights: FieldWeights,
    pub k_mem: f64,
    pub actions: Vec<MarketAction>,
    pub node_events: Vec<NodeEvent>,
}

impl<S: SeatInfo> NodeMarket<'_, S> {
    fn node(&self, cell: usize) -> &NodeState {
        &self.nodes[self.map.global(self.zone, cell)]
    }
}

impl<S: SeatInfo> CellMarket for NodeMarket<'_, S> {
    fn reserve(&self, cell: usize) -> Tokens {
        node_reserve(self.node(cell), self.k_mem)
    }

    fn cap(&self, cell: usize) -> Option<Tokens> {
        let g = self.map.global(self.zone, cell);
        let cap = entropic_price_cap(self.s_phys[g], &self.weights);
        Some((cap.floor() as Tokens).max(1))
    }

    fn admits(&self, cell: usize, agent: AgentId, quantity: u64) -> bool {
        let n = self.node(cell);
        n.resident(agent).is_none() && n.fits(quantity)
    }

    /// Lightest running resident whose lease would make room.
    fn incumbent(&self, cell: usize, quantity: u64) -> Option<Incumbent> {
        let n = self.node(cell);
        let free = n.free();
        n.residents()
            .iter()
            .filter(|r| r.mode == CgroupMode::Normal && r.footprint + free >= quantity)
            .map(|r| Incumbent {
                agent: r.agent,
                mass: self.seats.mass(r.agent),
                price: self.seats.paid(r.agent),
            })
            .min_by(|a, b| a.mass.total_cmp(&b.mass).then(a.agent.cmp(&b.agent)))
    }

    fn evict(&mut self, cell: usize, agent: AgentId) {
        let g = self.map.global(self.zone, cell);
        if let Ok((_, ev)) = self.nodes[g].evict(agent) {
            self.node_events.push(ev);
            self.actions.push(MarketAction::Evicted { agent, node: g });
        }
    }

    fn fill(&mut self, cell: usize, agent: AgentId, quantity: u64, _price: Tokens) {
        let g = self.map.global(self.zone, cell);
        match self.nodes[g].admit(agent, quantity) {
            Ok(ev) => {
                self.node_events.push(ev);
                self.actions.push(MarketAction::Filled {
                    agent,
                    node: g,
                    quantity,
                });
            }
            Err(e) => log::error!("fill on node {g} after admission check: {e}"),
        }
    }

    fn release(&mut self, cell: usize, agent: AgentId, _quantity: u64) -> bool {
        let g = self.map.global(self.zone, cell);
        match self.nodes[g].evict(agent) {
            Ok((_, ev)) => {
                self.node_events.push(ev);
                self.actions.push(MarketAction::Released { agent, node: g });
                true
            }
            Err(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zone_map_roundtrip() {
        let m = ZoneMap {
            width: 16,
            per_side: 2,
            side: 8,
        };
        for cell in 0..256 {
            let (z, l) = m.locate(cell);
            assert!(z < 4 && l < 64);
            assert_eq!(m.global(z, l), cell);
        }
        assert_eq!(m.locate(8), (1, 0));
        assert_eq!(m.locate(16 * 8), (2, 0));
    }

    #[test]
    fn reserve_rises_with_load() {
        let mut n = NodeState::new(0, 100).unwrap();
        let empty = node_reserve(&n, 95.0);
        assert_eq!(empty, 1);
        n.admit(1, 90).unwrap();
        assert_eq!(node_reserve(&n, 95.0), 19);
        n.admit(2, 5).unwrap();
        assert_eq!(node_reserve(&n, 95.0), SATURATED_RESERVE);
    }
}
