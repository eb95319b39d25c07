use serde::{Deserialize, Serialize};

use super::{compressed_size, CgroupMode, NodeError, NodeEvent, NodeEventKind, NodeState};
use crate::agents::AgentId;
use crate::ledger::Tokens;

/// Checkpoint units streamed through the buffer per tick.
pub const CHECKPOINT_RATE: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AirlockStage {
    IceSeal,
    SuspendStrong,
    VacuumEscape,
    ResumeStrong,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirlockReport {
    pub weak: AgentId,
    pub strong: AgentId,
    /// Stages actually executed, in order.
    pub stages: Vec<AirlockStage>,
    pub events: Vec<NodeEvent>,
    /// Units released by sealing the weak footprint.
    pub freed_by_seal: u64,
    pub strong_suspended: bool,
    /// Ticks the checkpoint occupies the buffer.
    pub escape_ticks: u64,
    /// Peak allocation observed after every sub-step.
    pub max_allocated: u64,
}

/// Lowest wallet, then smallest footprint, then lowest id.
pub fn select_weak(candidates: &[(AgentId, u64, Tokens)]) -> Option<AgentId> {
    candidates
        .iter()
        .min_by_key(|&&(id, fp, w)| (w, fp, id))
        .map(|c| c.0)
}

/// Runs the full evacuation of `weak` to make room for `strong_pending` more
/// units of `strong`. The weak resident leaves the node; the strong one always
/// ends in `Normal` mode.
pub fn run_airlock(
    node: &mut NodeState,
    weak: AgentId,
    strong: AgentId,
    strong_pending: u64,
    checkpoint_size: u64,
) -> Result<AirlockReport, NodeError> {
    if weak == strong {
        return Err(NodeError::SameAgent);
    }
    if checkpoint_size > node.buffer_reserved() {
        return Err(NodeError::CheckpointTooLarge {
            size: checkpoint_size,
            buffer: node.buffer_reserved(),
        });
    }
    let f = node.resident(weak).ok_or(NodeError::UnknownResident(weak))?.footprint;
    node.resident(strong).ok_or(NodeError::UnknownResident(strong))?;

    let id = node.node_id;
    let ev = |kind, agent, amount| NodeEvent {
        node: id,
        kind,
        agent,
        amount,
    };
    let mut report = AirlockReport {
        weak,
        strong,
        stages: vec![],
        events: vec![],
        freed_by_seal: 0,
        strong_suspended: false,
        escape_ticks: 0,
        max_allocated: node.allocated(),
    };
    let observe = |node: &NodeState, r: &mut AirlockReport| {
        debug_assert!(node.check_accounting());
        r.max_allocated = r.max_allocated.max(node.allocated());
    };

    // ice seal
    let z = compressed_size(f);
    {
        let r = node.resident_mut(weak)?;
        r.footprint = 0;
        r.mode = CgroupMode::Frozen;
    }
    node.zram_mut().push((weak, z));
    report.freed_by_seal = f - z;
    report.stages.push(AirlockStage::IceSeal);
    report.events.push(ev(NodeEventKind::Freeze, weak, z));
    observe(node, &mut report);

    if strong_pending > node.free() {
        node.set_mode(strong, CgroupMode::Suspended)?;
        report.strong_suspended = true;
        report.stages.push(AirlockStage::SuspendStrong);
        report.events.push(ev(NodeEventKind::Suspend, strong, strong_pending));
        observe(node, &mut report);
    }

    // vacuum escape through the emergency buffer
    node.set_buffer_used(checkpoint_size);
    report.escape_ticks = checkpoint_size.div_ceil(CHECKPOINT_RATE);
    report.stages.push(AirlockStage::VacuumEscape);
    report.events.push(ev(NodeEventKind::Escape, weak, checkpoint_size));
    observe(node, &mut report);
    node.remove_resident(weak);
    node.zram_mut().retain(|&(a, _)| a != weak);
    node.set_buffer_used(0);
    report.events.push(ev(NodeEventKind::Terminate, weak, z));
    observe(node, &mut report);

    node.set_mode(strong, CgroupMode::Normal)?;
    if report.strong_suspended {
        report.stages.push(AirlockStage::ResumeStrong);
        report.events.push(ev(NodeEventKind::Resume, strong, 0));
    }
    observe(node, &mut report);
    report.stages.push(AirlockStage::Done);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn node(weak_fp: u64, strong_fp: u64) -> NodeState {
        let mut n = NodeState::new(0, 100).unwrap();
        n.admit(1, weak_fp).unwrap();
        n.admit(2, strong_fp).unwrap();
        n
    }

    #[test]
    fn seal_frees_two_thirds() {
        let mut n = node(30, 65);
        let r = run_airlock(&mut n, 1, 2, 15, 5).unwrap();
        assert_eq!(r.freed_by_seal, 20);
        assert_eq!(r.events[0].amount, 10);
        assert!(!r.strong_suspended);
        assert_eq!(
            r.stages,
            vec![AirlockStage::IceSeal, AirlockStage::VacuumEscape, AirlockStage::Done]
        );
        assert!(n.resident(1).is_none());
        assert!(n.zram().is_empty());
        assert_eq!(n.resident(2).unwrap().mode, CgroupMode::Normal);
    }

    #[test]
    fn large_pending_suspends_then_resumes() {
        let mut n = node(30, 65);
        let r = run_airlock(&mut n, 1, 2, 25, 5).unwrap();
        assert!(r.strong_suspended);
        assert_eq!(
            r.stages,
            vec![
                AirlockStage::IceSeal,
                AirlockStage::SuspendStrong,
                AirlockStage::VacuumEscape,
                AirlockStage::ResumeStrong,
                AirlockStage::Done
            ]
        );
        // oracle: 95 -> 75 sealed -> 80 with checkpoint -> 65
        assert_eq!(r.max_allocated, 95);
        assert!(r.max_allocated <= 100);
        assert_eq!(n.resident(2).unwrap().mode, CgroupMode::Normal);
        assert_eq!(n.try_expand(2, 25).unwrap().0, super::super::ExpandOutcome::Granted);
    }

    #[test]
    fn oversized_checkpoint_rejected_without_mutation() {
        let mut n = node(30, 65);
        let before = n.clone();
        assert_eq!(
            run_airlock(&mut n, 1, 2, 25, 6).unwrap_err(),
            NodeError::CheckpointTooLarge { size: 6, buffer: 5 }
        );
        assert_eq!(n, before);
        assert_eq!(run_airlock(&mut n, 1, 1, 1, 1).unwrap_err(), NodeError::SameAgent);
        assert_eq!(run_airlock(&mut n, 7, 1, 1, 1).unwrap_err(), NodeError::UnknownResident(7));
        assert_eq!(n, before);
    }

    #[test]
    fn weak_selection_rules() {
        assert_eq!(select_weak(&[(1, 10, 0), (2, 10, 50)]), Some(1));
        assert_eq!(select_weak(&[(1, 10, 5), (2, 5, 5)]), Some(2));
        assert_eq!(select_weak(&[(3, 5, 5), (2, 5, 5), (4, 5, 5)]), Some(2));
        assert_eq!(select_weak(&[]), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn no_oom_under_random_bursts(seed_fps in proptest::collection::vec(1u64..20, 2..8), bursts in proptest::collection::vec((0usize..8, 1u64..30), 1..40), ckpt in 0u64..=5) {
            let mut n = NodeState::new(3, 100).unwrap();
            let mut ids = vec![];
            for (i, fp) in seed_fps.iter().enumerate() {
                if n.admit(i as AgentId, *fp).is_ok() { ids.push(i as AgentId); }
            }
            for (who, delta) in bursts {
                if ids.len() < 2 { break; }
                let strong = ids[who % ids.len()];
                let (out, _) = n.try_expand(strong, delta).unwrap();
                prop_assert!(n.check_accounting());
                if out == super::super::ExpandOutcome::GlassyTriggered {
                    let cands: Vec<_> = n.residents().iter().filter(|r| r.agent != strong).map(|r| (r.agent, r.footprint, r.agent % 3)).collect();
                    let weak = select_weak(&cands).unwrap();
                    let r = run_airlock(&mut n, weak, strong, delta, ckpt).unwrap();
                    prop_assert!(r.max_allocated <= n.c_total());
                    prop_assert_eq!(n.resident(strong).unwrap().mode, CgroupMode::Normal);
                    prop_assert!(n.resident(weak).is_none());
                    if r.strong_suspended {
                        prop_assert!(r.stages.contains(&AirlockStage::ResumeStrong));
                    }
                    ids.retain(|&a| a != weak);
                }
                prop_assert!(n.check_accounting());
            }
        }
    }
}
