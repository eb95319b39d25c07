//! Randomized adversarial expansion on single nodes.

use rand::Rng;
use serde::{Deserialize, Serialize};
use teg_core::agents::AgentId;
use teg_core::nodesim::{
    compressed_size, run_airlock, AirlockStage, select_weak, CgroupMode, ExpandOutcome, NodeState,
};
use teg_core::rng::stream_rng;

use super::Verdict;

const NOOOM_STREAM: u64 = 0x4E4F_4F4D;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoOomReport {
    pub scenarios: usize,
    pub expansions: u64,
    pub airlocks: u64,
    pub suspensions: u64,
    pub resumed: u64,
    pub strong_kills: u64,
    /// Highest `allocated / c_total` seen after any sub-step.
    pub peak_ratio: f64,
    pub violations: Vec<String>,
}

/// One scenario: a node of random size, a handful of residents with random
/// wallets, and a stream of expansion requests sized to overflow it.
fn scenario(seed: u64, index: u64, report: &mut NoOomReport) {
    let mut rng = stream_rng(seed, NOOOM_STREAM, index);
    let c = rng.random_range(20..=400u64);
    let mut node = NodeState::new(index as usize, c).expect("positive capacity");
    let mut wallets: Vec<(AgentId, u64)> = Vec::new();
    for id in 0..rng.random_range(2..=8u64) {
        let fp = rng.random_range(1..=c / 4);
        if node.admit(id, fp).is_ok() {
            wallets.push((id, rng.random_range(0..1000)));
        }
    }
    let check = |node: &NodeState, where_: &str, report: &mut NoOomReport| {
        report.peak_ratio = report.peak_ratio.max(node.allocated() as f64 / c as f64);
        if !node.check_accounting() {
            report.violations.push(format!("scenario {index}: {where_}: {node:?}"));
        }
    };
    for _ in 0..rng.random_range(10..60) {
        let live: Vec<AgentId> = node
            .residents()
            .iter()
            .filter(|r| r.mode == CgroupMode::Normal)
            .map(|r| r.agent)
            .collect();
        if live.len() < 2 {
            break;
        }
        let strong = live[rng.random_range(0..live.len())];
        let delta = rng.random_range(1..=c / 2);
        report.expansions += 1;
        let (out, _) = node.try_expand(strong, delta).expect("resident");
        check(&node, "expand", report);
        if out == ExpandOutcome::Granted {
            continue;
        }
        let wallet = |a: AgentId| wallets.iter().find(|w| w.0 == a).map_or(0, |w| w.1);
        let cands: Vec<_> = node
            .residents()
            .iter()
            .filter(|r| r.agent != strong && r.mode == CgroupMode::Normal)
            .map(|r| (r.agent, r.footprint, wallet(r.agent)))
            .collect();
        let Some(weak) = select_weak(&cands) else {
            node.unthrottle(strong).expect("resident");
            continue;
        };
        let fp = node.resident(weak).expect("candidate").footprint;
        let ckpt = compressed_size(fp).min(node.buffer_reserved());
        let r = run_airlock(&mut node, weak, strong, delta, ckpt).expect("valid airlock");
        report.airlocks += 1;
        report.peak_ratio = report.peak_ratio.max(r.max_allocated as f64 / c as f64);
        if r.max_allocated > c {
            report
                .violations
                .push(format!("scenario {index}: airlock peaked at {} > {c}", r.max_allocated));
        }
        check(&node, "airlock", report);
        let strong_mode = node.resident(strong).map(|s| s.mode);
        match strong_mode {
            None => report.strong_kills += 1,
            Some(CgroupMode::Normal) => {}
            Some(m) => report
                .violations
                .push(format!("scenario {index}: strong {strong} left in {m:?}")),
        }
        if r.strong_suspended {
            report.suspensions += 1;
            if strong_mode == Some(CgroupMode::Normal) && r.stages.contains(&AirlockStage::ResumeStrong) {
                report.resumed += 1;
            }
        }
        if node.resident(weak).is_some() {
            report.violations.push(format!("scenario {index}: weak {weak} still resident"));
        }
        if node.can_expand(strong, delta).unwrap_or(false) {
            node.try_expand(strong, delta).expect("resident");
            check(&node, "retry", report);
        }
    }
}

pub fn no_oom_report(scenarios: usize, seed: u64) -> NoOomReport {
    let mut report = NoOomReport {
        scenarios,
        ..Default::default()
    };
    for i in 0..scenarios as u64 {
        scenario(seed, i, &mut report);
    }
    report
}

pub fn verify_no_oom(scenarios: usize, seed: u64) -> (NoOomReport, Verdict) {
    let r = no_oom_report(scenarios, seed);
    let ok = r.violations.is_empty() && r.strong_kills == 0 && r.resumed == r.suspensions;
    let detail = format!(
        "{} scenarios, {} expansions, {} airlocks, {} suspended/{} resumed, {} strong kills, peak {:.3} of c_total{}",
        r.scenarios,
        r.expansions,
        r.airlocks,
        r.suspensions,
        r.resumed,
        r.strong_kills,
        r.peak_ratio,
        r.violations.first().map(|v| format!(", first violation: {v}")).unwrap_or_default()
    );
    (r, Verdict::new("no_oom", ok, detail))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_batch_is_safe_and_exercises_airlocks() {
        let (r, v) = verify_no_oom(50, 1);
        assert!(v.passed, "{}", v.detail);
        assert!(r.airlocks > 0);
        assert!(r.suspensions > 0);
        assert!(r.peak_ratio <= 1.0);
    }
}
