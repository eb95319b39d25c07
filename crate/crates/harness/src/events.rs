//! Event log records. One JSON object per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use teg_core::agents::{AgentId, Phase};
use teg_core::governor::{GovernorRecord, MacroPhase};
use teg_core::ledger::TokenSupply;
use teg_core::nodesim::NodeEventKind;

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentEventKind {
    Arrive,
    Seat,
    Evicted,
    Evacuated,
    Glassy,
    Complete,
    Bankrupt,
}

impl AgentEventKind {
    /// Events after which the agent is back in flight.
    pub fn starts_flight(self) -> bool {
        matches!(self, Self::Arrive | Self::Evicted | Self::Evacuated)
    }
}

/// Lease versus usage of one seated agent at an epoch boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatedRow {
    pub agent: AgentId,
    pub leased: u64,
    pub used: u64,
    /// Usage has stopped growing.
    pub plateau: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventBody {
    Agent {
        agent: AgentId,
        phase: Phase,
        x: f64,
        y: f64,
        wallet: u64,
        footprint: u64,
        event: AgentEventKind,
    },
    /// Seating detail: potential at the seat and friction paid in flight.
    Placed {
        agent: AgentId,
        node: usize,
        phi: f64,
        work: f64,
    },
    Settlement {
        zone: usize,
        cell: usize,
        winner: AgentId,
        quantity: u64,
        price: u64,
        second_price: u64,
        burned: u64,
        kind: String,
    },
    Node {
        node: usize,
        event: NodeEventKind,
        agent: AgentId,
        bytes: u64,
    },
    Airlock {
        node: usize,
        weak: AgentId,
        strong: AgentId,
        strong_suspended: bool,
        escape_ticks: u64,
        max_allocated: u64,
        c_total: u64,
    },
    Governor {
        re: f64,
        re_dot: f64,
        sdot: f64,
        phase: MacroPhase,
        h_barrier: f64,
        gamma_desired: f64,
        gamma_safe: f64,
        h_field: f64,
        gamma_broadcast: f64,
    },
    /// Epoch-end snapshot: node allocations, seated leases versus usage and
    /// the token supply.
    Epoch {
        allocated: Vec<u64>,
        c_total: u64,
        seated: Vec<SeatedRow>,
        supply: TokenSupply,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub epoch: u64,
    pub tick: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

impl EventBody {
    pub fn governor(r: &GovernorRecord) -> Self {
        EventBody::Governor {
            re: r.re,
            re_dot: r.re_dot,
            sdot: r.sdot,
            phase: r.phase,
            h_barrier: r.h_barrier,
            gamma_desired: r.gamma_desired,
            gamma_safe: r.gamma_safe,
            h_field: r.h_field,
            gamma_broadcast: r.gamma_broadcast,
        }
    }
}

pub fn write_jsonl<W: Write>(events: &[Event], mut w: W) -> Result<(), HarnessError> {
    for e in events {
        serde_json::to_writer(&mut w, e).map_err(|e| HarnessError::Io(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    Ok(())
}

pub fn to_jsonl(events: &[Event]) -> String {
    let mut buf = Vec::new();
    write_jsonl(events, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("json is utf-8")
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<Event>, HarnessError> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| HarnessError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let e = serde_json::from_str(&line)
            .map_err(|e| HarnessError::Io(format!("events line {}: {e}", n + 1)))?;
        out.push(e);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_roundtrip() {
        let ev = vec![
            Event {
                epoch: 1,
                tick: 120,
                body: EventBody::Agent {
                    agent: 4,
                    phase: Phase::Seated,
                    x: 0.1 + 0.2,
                    y: 3.0,
                    wallet: 99,
                    footprint: 8,
                    event: AgentEventKind::Seat,
                },
            },
            Event {
                epoch: 1,
                tick: 199,
                body: EventBody::Epoch {
                    allocated: vec![1, 2],
                    c_total: 64,
                    seated: vec![SeatedRow {
                        agent: 4,
                        leased: 8,
                        used: 8,
                        plateau: false,
                    }],
                    supply: TokenSupply::default(),
                },
            },
        ];
        let text = to_jsonl(&ev);
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("{\"epoch\":1,\"tick\":120,\"type\":\"agent\""));
        let back = read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back, ev);
    }
}
