//! Block-book search against brute force, aggregate consistency under random
//! churn, and exhaustive truthfulness of the second-price rule.

use rand::Rng;
use serde::{Deserialize, Serialize};
use teg_core::ledger::{
    settle_vickrey, CellMarket, Incumbent, KillReason, Order, Outcome, QuadBook, Tokens, TokenBank,
    ZoneLedger, ZoneParams,
};
use teg_core::agents::AgentId;
use teg_core::rng::stream_rng;

use super::Verdict;

const BOOK_STREAM: u64 = 0x424F_4F4B;

/// First fully free aligned block at `level` in `(y, x)` order, by scanning
/// every cell.
pub fn brute_force_block(free: &[bool], side: usize, level: u32) -> Option<(usize, usize)> {
    let span = 1usize << level;
    if span > side {
        return None;
    }
    let blocks = side / span;
    for by in 0..blocks {
        for bx in 0..blocks {
            let all = (by * span..(by + 1) * span)
                .all(|y| (bx * span..(bx + 1) * span).all(|x| free[y * side + x]));
            if all {
                return Some((bx, by));
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BookReport {
    pub patterns: usize,
    pub searches: usize,
    pub search_mismatches: usize,
    pub fok_orders: usize,
    pub fok_mismatches: usize,
    pub ops: usize,
    pub aggregate_mismatches: usize,
}

/// Flat reserve of 1, no cap, never evicts.
struct OpenMarket;

impl CellMarket for OpenMarket {
    fn reserve(&self, _: usize) -> Tokens {
        1
    }
    fn cap(&self, _: usize) -> Option<Tokens> {
        None
    }
    fn admits(&self, _: usize, _: AgentId, _: u64) -> bool {
        true
    }
    fn incumbent(&self, _: usize, _: u64) -> Option<Incumbent> {
        None
    }
    fn evict(&mut self, _: usize, _: AgentId) {}
    fn fill(&mut self, _: usize, _: AgentId, _: u64, _: Tokens) {}
    fn release(&mut self, _: usize, _: AgentId, _: u64) -> bool {
        true
    }
}

/// Zone ledger whose occupied cells are exactly `!free`, held by agent 0.
fn ledger_with(free: &[bool], side: usize, bank: &mut TokenBank) -> ZoneLedger {
    let params = ZoneParams {
        side,
        ring_capacity: 2 * side * side,
        c_txn: 0,
        mu_friction: 0.1,
    };
    let mut z = ZoneLedger::new(0, params).expect("valid zone");
    for _ in 0..side * side {
        z.submit(Order::fok(0, 1, 1), bank).expect("ring space");
    }
    z.clear(bank, &mut OpenMarket).expect("fill");
    for (c, &f) in free.iter().enumerate() {
        if f {
            z.submit(Order::release(0, c, 1), bank).expect("ring space");
        }
    }
    z.clear(bank, &mut OpenMarket).expect("release");
    z
}

/// Sends one fill-or-kill order per level through the ledger and compares the
/// filled root with brute force; each fill is released before the next level.
fn fok_matches(free: &[bool], side: usize, report: &mut BookReport) {
    let mut bank = TokenBank::new();
    bank.open(0, 1 << 40).expect("fresh bank");
    bank.open(1, 1 << 40).expect("fresh bank");
    let mut z = ledger_with(free, side, &mut bank);
    for level in 0..=side.trailing_zeros() {
        let qty = 1u64 << (2 * level);
        let expected = brute_force_block(free, side, level);
        z.submit(Order::fok(1, qty, 1), &mut bank).expect("aligned sku");
        let out = z.clear(&mut bank, &mut OpenMarket).expect("clear");
        report.fok_orders += 1;
        let span = 1usize << level;
        let ok = match (out.as_slice(), expected) {
            ([Outcome::BlockFilled { root, .. }], Some((bx, by))) => {
                let r = *root;
                z.submit(Order::release(1, r, qty), &mut bank).expect("ring space");
                z.clear(&mut bank, &mut OpenMarket).expect("release");
                r == by * span * side + bx * span
            }
            ([Outcome::Killed { reason: KillReason::NoFreeBlock, .. }], None) => true,
            _ => false,
        };
        if !ok {
            report.fok_mismatches += 1;
        }
    }
    if bank.audit().is_err() {
        report.fok_mismatches += 1;
    }
}

/// Random occupancy patterns of varying density; every level is searched.
pub fn search_equivalence(patterns: usize, side: usize, seed: u64, report: &mut BookReport) {
    let levels = side.trailing_zeros();
    for p in 0..patterns {
        let mut rng = stream_rng(seed, BOOK_STREAM, p as u64);
        let density: f64 = rng.random_range(0.0..0.6);
        let mut book = QuadBook::new(side).expect("power-of-two side");
        let mut free = vec![true; side * side];
        for (c, f) in free.iter_mut().enumerate() {
            if rng.random::<f64>() < density {
                book.occupy(c).expect("free cell");
                *f = false;
            }
        }
        report.patterns += 1;
        for level in 0..=levels {
            report.searches += 1;
            if book.find_free_block(level) != brute_force_block(&free, side, level) {
                report.search_mismatches += 1;
            }
        }
        fok_matches(&free, side, report);
    }
}

/// Mixed single-cell and block occupy/release; aggregates are compared with
/// a rebuild from the leaves every `check_every` ops and at the end.
pub fn churn_consistency(ops: usize, side: usize, seed: u64, check_every: usize, report: &mut BookReport) {
    let mut rng = stream_rng(seed, BOOK_STREAM + 1, 0);
    let mut book = QuadBook::new(side).expect("power-of-two side");
    let levels = side.trailing_zeros();
    let same = |b: &QuadBook| {
        let r = b.rebuilt();
        r.dump() == b.dump()
            && r.total_free() == b.total_free()
            && (0..=levels).all(|l| r.find_free_block(l) == b.find_free_block(l))
    };
    for i in 0..ops {
        let level = if rng.random::<f64>() < 0.7 { 0 } else { rng.random_range(1..levels.max(2)) };
        let blocks = side >> level;
        let (bx, by) = (rng.random_range(0..blocks), rng.random_range(0..blocks));
        // rejected ops must leave the book untouched
        let _ = if rng.random::<bool>() {
            book.occupy_block(level, bx, by)
        } else {
            book.release_block(level, bx, by)
        };
        report.ops += 1;
        if (i + 1) % check_every == 0 && !same(&book) {
            report.aggregate_mismatches += 1;
        }
    }
    if !same(&book) {
        report.aggregate_mismatches += 1;
    }
}

pub fn verify_orderbook(patterns: usize, ops: usize, seed: u64) -> (BookReport, Verdict) {
    let mut r = BookReport::default();
    search_equivalence(patterns, 16, seed, &mut r);
    churn_consistency(ops, 16, seed, 100, &mut r);
    let ok = r.search_mismatches == 0 && r.fok_mismatches == 0 && r.aggregate_mismatches == 0;
    let detail = format!(
        "{} patterns, {} searches and {} fill-or-kill orders, {} mismatches; {} ops, {} aggregate mismatches",
        r.patterns,
        r.searches,
        r.fok_orders,
        r.search_mismatches + r.fok_mismatches,
        r.ops,
        r.aggregate_mismatches
    );
    (r, Verdict::new("orderbook_oracle", ok, detail))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TruthReport {
    pub cells: u64,
    pub violations: u64,
}

fn utility(value: Tokens, bid: Tokens, other: Tokens, first: bool, reserve: Tokens) -> i64 {
    let mine = Order::bid(0, 0, 1, bid);
    let theirs = Order::bid(1, 0, 1, other);
    let (mut a, mut b) = (mine, theirs);
    a.seq = if first { 0 } else { 1 };
    b.seq = if first { 1 } else { 0 };
    match settle_vickrey(&[a, b], reserve, None) {
        Some(s) if s.winner == 0 => value as i64 - s.price as i64,
        _ => 0,
    }
}

/// For every value, rival bid, deviation, tie order and reserve on
/// `0..=max`, truthful bidding earns at least as much as the deviation.
pub fn verify_truthfulness(max: Tokens) -> (TruthReport, Verdict) {
    let mut r = TruthReport::default();
    for reserve in [0, max / 3] {
        for first in [true, false] {
            for value in 0..=max {
                for other in 0..=max {
                    let honest = utility(value, value, other, first, reserve);
                    for dev in 0..=max {
                        r.cells += 1;
                        if utility(value, dev, other, first, reserve) > honest {
                            r.violations += 1;
                        }
                    }
                }
            }
        }
    }
    let detail = format!("{} profiles on 0..={max}, {} profitable deviations", r.cells, r.violations);
    (r, Verdict::new("vickrey_truthfulness", r.violations == 0, detail))
}
