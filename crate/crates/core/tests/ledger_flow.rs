use std::collections::BTreeMap;

use proptest::prelude::*;
use teg_core::agents::AgentId;
use teg_core::ledger::{CellMarket, Incumbent, Order, Tokens, TokenBank, ZoneLedger, ZoneParams};

/// One tenant per cell with a flat reserve; evicts when asked.
#[derive(Default)]
struct Seats {
    reserve: Tokens,
    held: BTreeMap<usize, (AgentId, Tokens)>,
}

impl CellMarket for Seats {
    fn reserve(&self, _: usize) -> Tokens {
        self.reserve
    }
    fn cap(&self, _: usize) -> Option<Tokens> {
        None
    }
    fn admits(&self, cell: usize, _: AgentId, _: u64) -> bool {
        !self.held.contains_key(&cell)
    }
    fn incumbent(&self, cell: usize, _: u64) -> Option<Incumbent> {
        self.held.get(&cell).map(|&(agent, price)| Incumbent { agent, mass: 1.0, price })
    }
    fn evict(&mut self, cell: usize, _: AgentId) {
        self.held.remove(&cell);
    }
    fn fill(&mut self, cell: usize, agent: AgentId, _: u64, price: Tokens) {
        self.held.insert(cell, (agent, price));
    }
    fn release(&mut self, cell: usize, agent: AgentId, _: u64) -> bool {
        match self.held.get(&cell) {
            Some(&(a, _)) if a == agent => {
                self.held.remove(&cell);
                true
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Bid(AgentId, usize, Tokens),
    Fok(AgentId, u32, Tokens),
    Release(AgentId, usize),
    Probe(AgentId, usize, Tokens),
    Clear,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (0u64..4, 0usize..16, 0u64..20).prop_map(|(a, c, l)| Op::Bid(a, c, l)),
        1 => (0u64..4, 0u32..3, 0u64..6).prop_map(|(a, k, l)| Op::Fok(a, k, l)),
        2 => (0u64..4, 0usize..16).prop_map(|(a, c)| Op::Release(a, c)),
        1 => (0u64..4, 0usize..16, 0u64..20).prop_map(|(a, c, l)| Op::Probe(a, c, l)),
        2 => Just(Op::Clear),
    ]
}

proptest! {
    #[test]
    fn random_order_flow_conserves_tokens(ops in prop::collection::vec(op(), 1..120), reserve in 0u64..4) {
        let params = ZoneParams { side: 4, ring_capacity: 64, c_txn: 1, mu_friction: 0.1 };
        let mut z = ZoneLedger::new(0, params).unwrap();
        let mut bank = TokenBank::new();
        for a in 0..4 {
            bank.open(a, 500).unwrap();
        }
        let mut m = Seats { reserve, ..Default::default() };
        let mut burned = 0;
        for op in ops {
            let order = match op {
                Op::Bid(a, c, l) => Some(Order::bid(a, c, 1, l)),
                Op::Fok(a, k, l) => Some(Order::fok(a, 1 << (2 * k), l)),
                Op::Release(a, c) => Some(Order::release(a, c, 1)),
                Op::Probe(a, c, l) => Some(Order::bid(a, c, 1, l).into_virtual()),
                Op::Clear => None,
            };
            match order {
                // rejected submissions (no funds, full ring) must not move tokens
                Some(o) => {
                    let before = bank.supply();
                    if z.submit(o, &mut bank).is_err() {
                        prop_assert_eq!(bank.supply(), before);
                    }
                }
                None => {
                    z.clear(&mut bank, &mut m).unwrap();
                }
            }
            let s = bank.supply();
            prop_assert!(s.balanced(), "{:?}", s);
            prop_assert!(s.burned >= burned);
            prop_assert_eq!(s.injected, 2000);
            prop_assert_eq!(s.escrowed, z.pending_escrow());
            burned = s.burned;
        }
        z.clear(&mut bank, &mut m).unwrap();
        prop_assert_eq!(bank.supply().escrowed, 0);
        prop_assert_eq!(bank.supply().burned, z.burned());
        bank.audit().unwrap();
    }
}
