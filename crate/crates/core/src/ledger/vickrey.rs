use serde::{Deserialize, Serialize};

use super::{Order, OrderKind, Tokens};
use crate::agents::AgentId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Settlement {
    pub seq: u64,
    pub winner: AgentId,
    pub quantity: u64,
    /// Per-unit price charged.
    pub price: Tokens,
    /// Per-unit second-highest effective limit, zero for a sole bidder.
    pub second_price: Tokens,
    /// Winner's limit after the cap.
    pub winner_limit: Tokens,
}

/// Second-price clearing of the real bids for one cell.
///
/// Limits are truncated at `cap` when present and the reserve never exceeds
/// the cap. A bid is valid when its effective limit is positive and at least
/// the reserve. The winner has the highest effective limit, earliest seq on
/// ties, and pays the larger of the runner-up limit and the reserve.
pub fn settle_vickrey(bids: &[Order], reserve: Tokens, cap: Option<Tokens>) -> Option<Settlement> {
    let reserve = cap.map_or(reserve, |c| reserve.min(c));
    let effective = |o: &Order| cap.map_or(o.limit_price, |c| o.limit_price.min(c));
    let mut valid: Vec<(&Order, Tokens)> = bids
        .iter()
        .filter(|o| o.kind == OrderKind::Bid && !o.is_virtual && o.quantity > 0)
        .map(|o| (o, effective(o)))
        .filter(|&(_, e)| e > 0 && e >= reserve)
        .collect();
    valid.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.seq.cmp(&b.0.seq)));
    let (win, limit) = *valid.first()?;
    let second = valid.get(1).map_or(0, |&(_, e)| e);
    Some(Settlement {
        seq: win.seq,
        winner: win.agent_id,
        quantity: win.quantity,
        price: second.max(reserve),
        second_price: second,
        winner_limit: limit,
    })
}

/// Static-friction eviction rule `p_new - p_local > mu * m_incumbent`.
pub fn eviction_check(p_bid_new: f64, p_local: f64, incumbent_mass: f64, mu: f64) -> bool {
    p_bid_new - p_local > mu * incumbent_mass
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bids(limits: &[Tokens]) -> Vec<Order> {
        limits
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let mut o = Order::bid(i as AgentId, 0, 1, l);
                o.seq = i as u64 + 1;
                o
            })
            .collect()
    }

    #[test]
    fn textbook_second_price() {
        let s = settle_vickrey(&bids(&[10, 7, 3]), 0, None).unwrap();
        assert_eq!((s.winner, s.price, s.second_price), (0, 7, 7));
    }

    #[test]
    fn sole_bidder_pays_reserve() {
        let s = settle_vickrey(&bids(&[10]), 2, None).unwrap();
        assert_eq!(s.price, 2);
        assert_eq!(settle_vickrey(&bids(&[1, 1]), 2, None), None);
    }

    #[test]
    fn cap_truncates_limits_and_ties_go_to_first_seq() {
        let s = settle_vickrey(&bids(&[3, 50, 40]), 1, Some(20)).unwrap();
        assert_eq!((s.winner, s.price), (1, 20));
        let s = settle_vickrey(&bids(&[5, 5]), 0, None).unwrap();
        assert_eq!(s.winner, 0);
        // the reserve is capped too
        let s = settle_vickrey(&bids(&[9]), 30, Some(8)).unwrap();
        assert_eq!(s.price, 8);
    }

    #[test]
    fn virtual_and_zero_bids_never_settle() {
        let mut b = bids(&[10, 0]);
        b[0].is_virtual = true;
        assert_eq!(settle_vickrey(&b, 0, None), None);
    }

    #[test]
    fn truthful_bidding_is_dominant() {
        for reserve in [0, 3] {
            for first in [true, false] {
                for v in 0..=10u64 {
                    for other in 0..=10u64 {
                        let utility = |b: u64| {
                            let mut me = Order::bid(0, 0, 1, b);
                            let mut them = Order::bid(1, 0, 1, other);
                            me.seq = if first { 1 } else { 2 };
                            them.seq = if first { 2 } else { 1 };
                            match settle_vickrey(&[me, them], reserve, None) {
                                Some(s) if s.winner == 0 => v as i64 - s.price as i64,
                                _ => 0,
                            }
                        };
                        let truthful = utility(v);
                        for dev in 0..=10u64 {
                            assert!(utility(dev) <= truthful, "v={v} other={other} dev={dev}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn eviction_examples() {
        assert!(eviction_check(10.0, 4.0, 50.0, 0.1));
        assert!(!eviction_check(7.0, 7.0, 1e-3, 0.1));
        assert!(!eviction_check(1e12, 0.0, f64::INFINITY, 0.1));
        assert!(!eviction_check(9.0, 4.0, 50.0, 0.1));
    }

    proptest! {
        #[test]
        fn payment_bounded_and_independent_of_own_limit(
            limits in proptest::collection::vec(1u64..100, 2..8),
            reserve in 0u64..20,
            bump in 0u64..100,
        ) {
            let b = bids(&limits);
            if let Some(s) = settle_vickrey(&b, reserve, None) {
                let win = &b[s.winner as usize];
                prop_assert!(s.price <= win.limit_price);
                let mut raised = b.clone();
                raised[s.winner as usize].limit_price += bump;
                let s2 = settle_vickrey(&raised, reserve, None).unwrap();
                prop_assert_eq!(s2.winner, s.winner);
                prop_assert_eq!(s2.price, s.price);
            }
        }
    }
}
