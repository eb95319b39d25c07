//! Placement-only rounds over real zone ledgers: decay of the unplaced
//! count, steps to quiescence and per-decision work against cluster size.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use teg_core::agents::AgentId;
use teg_core::ledger::{CellMarket, Incumbent, Order, Outcome, TokenBank, Tokens, ZoneLedger, ZoneParams};
use teg_core::rng::stream_rng;

use super::Verdict;
use crate::baseline::BaselineModel;
use crate::sim::ZoneMap;

const CONVERGE_STREAM: u64 = 0x434F_4E56;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    /// Lattice sides; `N = side^2`.
    pub sides: Vec<usize>,
    pub choices: Vec<usize>,
    pub zone_side: usize,
    /// Agents per node.
    pub load: f64,
    pub seeds: u64,
    pub max_rounds: usize,
    pub tau: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            sides: vec![8, 16, 32],
            choices: vec![2, 4],
            zone_side: 8,
            load: 0.5,
            seeds: 5,
            max_rounds: 64,
            tau: 1e-3,
        }
    }
}

/// One tenant per node; the zone ledger sees local cell indices.
struct SlotMarket<'a> {
    zone: usize,
    map: ZoneMap,
    seats: &'a mut [Option<AgentId>],
}

impl CellMarket for SlotMarket<'_> {
    fn reserve(&self, _: usize) -> Tokens {
        1
    }
    fn cap(&self, _: usize) -> Option<Tokens> {
        None
    }
    fn admits(&self, cell: usize, _: AgentId, _: u64) -> bool {
        self.seats[self.map.global(self.zone, cell)].is_none()
    }
    fn incumbent(&self, _: usize, _: u64) -> Option<Incumbent> {
        None
    }
    fn evict(&mut self, _: usize, _: AgentId) {}
    fn fill(&mut self, cell: usize, agent: AgentId, _: u64, _: Tokens) {
        self.seats[self.map.global(self.zone, cell)] = Some(agent);
    }
    fn release(&mut self, _: usize, _: AgentId, _: u64) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementRun {
    pub nodes: usize,
    pub choices: usize,
    /// Unplaced agents before round 1, after round 1, ...
    pub unplaced: Vec<usize>,
    pub quiescence: Option<usize>,
    /// Probes plus orders sharing the cell at clearing, per decision.
    pub work_per_decision: f64,
}

impl PlacementRun {
    pub fn monotone(&self) -> bool {
        self.unplaced.windows(2).all(|w| w[1] <= w[0])
    }

    /// `exp` of the least-squares slope of `ln dS(t)` over the non-zero
    /// part of the series, `None` when the series is not monotone.
    pub fn decay_ratio(&self) -> Option<f64> {
        if !self.monotone() {
            return None;
        }
        let pts: Vec<(f64, f64)> = self
            .unplaced
            .iter()
            .enumerate()
            .take_while(|(_, &u)| u > 0)
            .map(|(t, &u)| (t as f64, (u as f64).ln()))
            .collect();
        if pts.len() < 2 {
            // cleared within one round
            return Some(0.0);
        }
        let n = pts.len() as f64;
        let (mx, my) = (
            pts.iter().map(|p| p.0).sum::<f64>() / n,
            pts.iter().map(|p| p.1).sum::<f64>() / n,
        );
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some((sxy / sxx).exp())
    }
}

/// Every unplaced agent probes `choices` random nodes, bids on the emptiest
/// of them, and zones clear; losers retry next round.
pub fn placement_run(side: usize, zone_side: usize, choices: usize, load: f64, seed: u64, max_rounds: usize) -> PlacementRun {
    let n = side * side;
    let map = ZoneMap {
        width: side,
        per_side: side / zone_side,
        side: zone_side,
    };
    let params = ZoneParams {
        side: zone_side,
        ring_capacity: n.max(16),
        c_txn: 0,
        mu_friction: 0.0,
    };
    let mut zones: Vec<ZoneLedger> = (0..map.zones())
        .map(|z| ZoneLedger::new(z, params).expect("power-of-two zone"))
        .collect();
    let mut bank = TokenBank::new();
    let agents = ((n as f64) * load).round() as usize;
    for a in 0..agents as AgentId {
        bank.open(a, 1_000_000).expect("fresh account");
    }
    let mut seats: Vec<Option<AgentId>> = vec![None; n];
    let mut rng = stream_rng(seed, CONVERGE_STREAM, (side * 16 + choices) as u64);
    let mut waiting: Vec<AgentId> = (0..agents as AgentId).collect();
    let mut unplaced = vec![waiting.len()];
    let (mut work, mut decisions) = (0u64, 0u64);
    let mut quiescence = (agents == 0).then_some(0);
    for round in 1..=max_rounds {
        if waiting.is_empty() {
            break;
        }
        waiting.shuffle(&mut rng);
        let mut per_cell = vec![0u64; n];
        let mut targets = Vec::with_capacity(waiting.len());
        for &a in &waiting {
            let best = (0..choices)
                .map(|_| rng.random_range(0..n))
                .min_by_key(|&c| seats[c].is_some())
                .expect("at least one choice");
            work += choices as u64;
            per_cell[best] += 1;
            targets.push((a, best));
        }
        for &(a, cell) in &targets {
            let (z, local) = map.locate(cell);
            let limit = rng.random_range(1..=100);
            zones[z].submit(Order::bid(a, local, 1, limit), &mut bank).expect("escrow");
        }
        let mut placed = Vec::new();
        for (z, ledger) in zones.iter_mut().enumerate() {
            let mut m = SlotMarket {
                zone: z,
                map,
                seats: &mut seats,
            };
            for o in ledger.clear(&mut bank, &mut m).expect("clearing") {
                if let Outcome::Filled { agent, .. } = o {
                    placed.push(agent);
                }
            }
        }
        for &(_, cell) in &targets {
            work += per_cell[cell];
        }
        decisions += targets.len() as u64;
        waiting.retain(|a| !placed.contains(a));
        unplaced.push(waiting.len());
        if waiting.is_empty() && quiescence.is_none() {
            quiescence = Some(round);
        }
    }
    debug_assert!(bank.supply().balanced());
    PlacementRun {
        nodes: n,
        choices,
        unplaced,
        quiescence,
        work_per_decision: if decisions == 0 { 0.0 } else { work as f64 / decisions as f64 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub nodes: usize,
    pub choices: usize,
    pub worst_ratio: Option<f64>,
    pub ratio_bound: f64,
    pub worst_quiescence: Option<usize>,
    pub quiescence_bound: f64,
    pub mean_work: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Work per decision at the largest over the smallest N, per M.
    pub latency_ratios: Vec<(usize, f64)>,
    pub baseline_slope: f64,
}

/// Log-log least-squares slope of `y` against `x`.
pub fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let l: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = l.len() as f64;
    let mx = l.iter().map(|p| p.0).sum::<f64>() / n;
    let my = l.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = l.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = l.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn measure_convergence(cfg: &ConvergenceConfig) -> ScalingReport {
    let mut rows = Vec::new();
    for &m in &cfg.choices {
        for &side in &cfg.sides {
            let runs: Vec<PlacementRun> = (0..cfg.seeds)
                .map(|s| placement_run(side, cfg.zone_side, m, cfg.load, s, cfg.max_rounds))
                .collect();
            let n = side * side;
            let ratios: Option<Vec<f64>> = runs.iter().map(|r| r.decay_ratio()).collect();
            let q: Option<Vec<usize>> = runs.iter().map(|r| r.quiescence).collect();
            rows.push(ScalingRow {
                nodes: n,
                choices: m,
                worst_ratio: ratios.map(|v| v.into_iter().fold(0.0, f64::max)),
                ratio_bound: 1.5 / m as f64,
                worst_quiescence: q.map(|v| v.into_iter().max().unwrap_or(0)),
                quiescence_bound: 2.0 * (n as f64).ln() / (m as f64).ln(),
                mean_work: runs.iter().map(|r| r.work_per_decision).sum::<f64>() / runs.len() as f64,
            });
        }
    }
    let latency_ratios = cfg
        .choices
        .iter()
        .map(|&m| {
            let mine: Vec<&ScalingRow> = rows.iter().filter(|r| r.choices == m).collect();
            let lo = mine.iter().min_by_key(|r| r.nodes).expect("non-empty sweep");
            let hi = mine.iter().max_by_key(|r| r.nodes).expect("non-empty sweep");
            (m, hi.mean_work / lo.mean_work)
        })
        .collect();
    let model = BaselineModel {
        tau: cfg.tau,
        lambda: 0.0,
    };
    let pts: Vec<(f64, f64)> = cfg
        .sides
        .iter()
        .map(|&s| ((s * s) as f64, model.decision_latency(s * s)))
        .collect();
    ScalingReport {
        rows,
        latency_ratios,
        baseline_slope: loglog_slope(&pts),
    }
}

pub fn verify_convergence(cfg: &ConvergenceConfig) -> (ScalingReport, Verdict) {
    let r = measure_convergence(cfg);
    let sizes: Vec<usize> = cfg.sides.iter().map(|s| s * s).collect();
    let span = sizes.iter().max().copied().unwrap_or(1) as f64 / sizes.iter().min().copied().unwrap_or(1) as f64;
    let mut ok = span >= 16.0;
    let mut parts = Vec::new();
    for row in &r.rows {
        let good = row.worst_ratio.is_some_and(|x| x <= row.ratio_bound)
            && row.worst_quiescence.is_some_and(|q| q as f64 <= row.quiescence_bound);
        ok &= good;
        parts.push(format!(
            "N={} M={}: ratio {} (<= {:.3}), quiescence {} (<= {:.1})",
            row.nodes,
            row.choices,
            row.worst_ratio.map_or("skipped".into(), |x| format!("{x:.3}")),
            row.ratio_bound,
            row.worst_quiescence.map_or("none".into(), |q| q.to_string()),
            row.quiescence_bound
        ));
    }
    for &(m, ratio) in &r.latency_ratios {
        ok &= (0.8..=1.25).contains(&ratio);
        parts.push(format!("M={m} work ratio over {span}x N {ratio:.3}"));
    }
    ok &= (r.baseline_slope - 1.0).abs() <= 0.05;
    parts.push(format!("baseline slope {:.4}", r.baseline_slope));
    (r, Verdict::new("scaling_laws", ok, parts.join("; ")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cluster_quiesces() {
        let r = placement_run(16, 8, 4, 0.5, 0, 64);
        assert_eq!(r.unplaced[0], 128);
        assert!(r.monotone());
        assert!(r.quiescence.is_some_and(|q| q <= 8), "{r:?}");
        assert!(r.decay_ratio().unwrap() < 0.375);
    }

    #[test]
    fn slope_of_a_line() {
        let pts = [(1.0, 3.0), (10.0, 30.0), (100.0, 300.0)];
        assert!((loglog_slope(&pts) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_monotone_skips_fit() {
        let r = PlacementRun {
            nodes: 4,
            choices: 2,
            unplaced: vec![4, 2, 3, 0],
            quiescence: Some(3),
            work_per_decision: 1.0,
        };
        assert_eq!(r.decay_ratio(), None);
    }
}
