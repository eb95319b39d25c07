use serde::{Deserialize, Serialize};

use super::NodeError;
use crate::agents::AgentId;

/// Size of a footprint sealed into zram at a fixed 3x ratio.
pub fn compressed_size(footprint: u64) -> u64 {
    footprint.div_ceil(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CgroupMode {
    Normal,
    Throttled { cpu_share: f64 },
    Frozen,
    Suspended,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resident {
    pub agent: AgentId,
    pub footprint: u64,
    pub mode: CgroupMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeEventKind {
    Admit,
    Grant,
    Glassy,
    Freeze,
    Suspend,
    Escape,
    Resume,
    Terminate,
    Release,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeEvent {
    pub node: usize,
    pub kind: NodeEventKind,
    pub agent: AgentId,
    pub amount: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpandOutcome {
    Granted,
    GlassyTriggered,
}

/// Memory accounting of one node in integer units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub node_id: usize,
    c_total: u64,
    buffer_reserved: u64,
    residents: Vec<Resident>,
    zram: Vec<(AgentId, u64)>,
    buffer_used: u64,
}

impl NodeState {
    /// The buffer is `ceil(5% of c_total)`.
    pub fn new(node_id: usize, c_total: u64) -> Result<Self, NodeError> {
        if c_total == 0 {
            return Err(NodeError::ZeroCapacity);
        }
        Ok(Self {
            node_id,
            c_total,
            buffer_reserved: (c_total * 5).div_ceil(100),
            residents: Vec::new(),
            zram: Vec::new(),
            buffer_used: 0,
        })
    }

    pub fn c_total(&self) -> u64 {
        self.c_total
    }

    pub fn buffer_reserved(&self) -> u64 {
        self.buffer_reserved
    }

    pub fn buffer_used(&self) -> u64 {
        self.buffer_used
    }

    pub(super) fn set_buffer_used(&mut self, v: u64) {
        debug_assert!(v <= self.buffer_reserved);
        self.buffer_used = v;
    }

    /// Capacity outside the emergency buffer.
    pub fn usable(&self) -> u64 {
        self.c_total - self.buffer_reserved
    }

    pub fn residents(&self) -> &[Resident] {
        &self.residents
    }

    pub fn zram(&self) -> &[(AgentId, u64)] {
        &self.zram
    }

    pub fn resident_total(&self) -> u64 {
        self.residents.iter().map(|r| r.footprint).sum()
    }

    pub fn zram_total(&self) -> u64 {
        self.zram.iter().map(|z| z.1).sum()
    }

    /// Resident footprints, zram and any buffer in use.
    pub fn allocated(&self) -> u64 {
        self.resident_total() + self.zram_total() + self.buffer_used
    }

    /// Free units outside the buffer.
    pub fn free(&self) -> u64 {
        self.usable()
            .saturating_sub(self.resident_total() + self.zram_total())
    }

    /// Units not held by residents or zram, buffer included.
    pub fn free_total(&self) -> u64 {
        self.c_total - self.resident_total() - self.zram_total()
    }

    pub fn resident(&self, agent: AgentId) -> Option<&Resident> {
        self.residents.iter().find(|r| r.agent == agent)
    }

    pub(super) fn resident_mut(&mut self, agent: AgentId) -> Result<&mut Resident, NodeError> {
        self.residents
            .iter_mut()
            .find(|r| r.agent == agent)
            .ok_or(NodeError::UnknownResident(agent))
    }

    pub(super) fn zram_mut(&mut self) -> &mut Vec<(AgentId, u64)> {
        &mut self.zram
    }

    pub(super) fn remove_resident(&mut self, agent: AgentId) -> Option<Resident> {
        let i = self.residents.iter().position(|r| r.agent == agent)?;
        Some(self.residents.remove(i))
    }

    fn event(&self, kind: NodeEventKind, agent: AgentId, amount: u64) -> NodeEvent {
        NodeEvent {
            node: self.node_id,
            kind,
            agent,
            amount,
        }
    }

    pub fn fits(&self, units: u64) -> bool {
        units <= self.free()
    }

    /// Seats a new resident with an initial lease.
    pub fn admit(&mut self, agent: AgentId, footprint: u64) -> Result<NodeEvent, NodeError> {
        if self.resident(agent).is_some() {
            return Err(NodeError::AlreadyResident(agent));
        }
        if !self.fits(footprint) {
            return Err(NodeError::NoRoom {
                need: footprint,
                free: self.free(),
            });
        }
        self.residents.push(Resident {
            agent,
            footprint,
            mode: CgroupMode::Normal,
        });
        Ok(self.event(NodeEventKind::Admit, agent, footprint))
    }

    /// Whether `try_expand` would grant without side effects.
    pub fn can_expand(&self, agent: AgentId, delta: u64) -> Result<bool, NodeError> {
        let r = self.resident(agent).ok_or(NodeError::UnknownResident(agent))?;
        Ok(delta > 0 && r.mode == CgroupMode::Normal && self.fits(delta))
    }

    /// Grows a lease inside the usable capacity, or throttles the requester.
    /// A resident that is not running normally is arrested.
    pub fn try_expand(&mut self, agent: AgentId, delta: u64) -> Result<(ExpandOutcome, NodeEvent), NodeError> {
        if delta == 0 {
            return Err(NodeError::ZeroDelta);
        }
        let fits = self.fits(delta);
        let r = self.resident_mut(agent)?;
        if r.mode == CgroupMode::Normal && fits {
            r.footprint += delta;
            return Ok((ExpandOutcome::Granted, self.event(NodeEventKind::Grant, agent, delta)));
        }
        if matches!(r.mode, CgroupMode::Normal | CgroupMode::Throttled { .. }) {
            r.mode = CgroupMode::Throttled { cpu_share: 0.0 };
        }
        Ok((
            ExpandOutcome::GlassyTriggered,
            self.event(NodeEventKind::Glassy, agent, delta),
        ))
    }

    pub fn unthrottle(&mut self, agent: AgentId) -> Result<(), NodeError> {
        let r = self.resident_mut(agent)?;
        if matches!(r.mode, CgroupMode::Throttled { .. }) {
            r.mode = CgroupMode::Normal;
        }
        Ok(())
    }

    pub fn set_mode(&mut self, agent: AgentId, mode: CgroupMode) -> Result<(), NodeError> {
        self.resident_mut(agent)?.mode = mode;
        Ok(())
    }

    /// Returns part of a lease; the resident stays with what remains.
    pub fn shrink(&mut self, agent: AgentId, units: u64) -> Result<u64, NodeError> {
        let r = self.resident_mut(agent)?;
        let take = units.min(r.footprint);
        r.footprint -= take;
        Ok(take)
    }

    /// Removes a resident and any zram it holds, returning the freed units.
    pub fn evict(&mut self, agent: AgentId) -> Result<(u64, NodeEvent), NodeError> {
        let r = self
            .remove_resident(agent)
            .ok_or(NodeError::UnknownResident(agent))?;
        let mut freed = r.footprint;
        self.zram.retain(|&(a, z)| {
            if a == agent {
                freed += z;
                false
            } else {
                true
            }
        });
        Ok((freed, self.event(NodeEventKind::Release, agent, freed)))
    }

    /// `sum footprints + sum zram + free_total = c_total` and the no-OOM bound.
    pub fn check_accounting(&self) -> bool {
        self.resident_total() + self.zram_total() + self.free_total() == self.c_total
            && self.allocated() <= self.c_total
            && self.buffer_used <= self.buffer_reserved
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_examples() {
        let mut n = NodeState::new(0, 100).unwrap();
        assert_eq!(n.buffer_reserved(), 5);
        n.admit(1, 50).unwrap();
        assert_eq!(n.try_expand(1, 10).unwrap().0, ExpandOutcome::Granted);
        assert_eq!(n.allocated(), 60);
        n.try_expand(1, 30).unwrap();
        assert_eq!(n.allocated(), 90);
        assert_eq!(n.try_expand(1, 10).unwrap().0, ExpandOutcome::GlassyTriggered);
        assert_eq!(n.allocated(), 90);
        assert!(matches!(n.resident(1).unwrap().mode, CgroupMode::Throttled { .. }));
        // arrested next tick even for a small delta that would fit
        assert_eq!(n.try_expand(1, 1).unwrap().0, ExpandOutcome::GlassyTriggered);
        assert_eq!(n.resident(1).unwrap().footprint, 90);
        n.unthrottle(1).unwrap();
        assert_eq!(n.try_expand(1, 5).unwrap().0, ExpandOutcome::Granted);
        assert!(n.check_accounting());
    }

    #[test]
    fn unknown_and_duplicate_residents() {
        let mut n = NodeState::new(0, 20).unwrap();
        assert_eq!(n.buffer_reserved(), 1);
        assert_eq!(n.try_expand(9, 1).unwrap_err(), NodeError::UnknownResident(9));
        n.admit(1, 4).unwrap();
        assert_eq!(n.admit(1, 1).unwrap_err(), NodeError::AlreadyResident(1));
        assert!(matches!(n.admit(2, 16), Err(NodeError::NoRoom { .. })));
        assert!(NodeState::new(0, 0).is_err());
    }

    #[test]
    fn compression_is_ceil_third() {
        assert_eq!(compressed_size(30), 10);
        assert_eq!(compressed_size(31), 11);
        assert_eq!(compressed_size(0), 0);
    }
}
