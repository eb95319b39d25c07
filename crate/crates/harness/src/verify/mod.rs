//! Verification oracles. Each takes configs or logs and returns a report with
//! a pass/fail verdict; none of them read global state.

pub mod book;
pub mod convergence;
pub mod damping;
pub mod equilibrium;
pub mod fear;
pub mod lyapunov;
pub mod nooom;
pub mod stress;
pub mod thermal;

use serde::{Deserialize, Serialize};

use crate::config::{MetricsConfig, ScenarioConfig};
use crate::events::{to_jsonl, Event, EventBody};
use crate::metrics::{metrics_from_events, RunMetrics};
use crate::sim::run_scenario;
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// Checks `injected = circulating + escrowed + burned` at every logged
/// epoch and that burned never decreases.
pub fn verify_conservation(events: &[Event]) -> Verdict {
    let mut last_burned = 0;
    let mut epochs = 0;
    for e in events {
        if let EventBody::Epoch { supply, .. } = &e.body {
            epochs += 1;
            if !supply.balanced() {
                return Verdict::new("conservation", false, format!("epoch {}: {supply:?}", e.epoch));
            }
            if supply.burned < last_burned {
                return Verdict::new(
                    "conservation",
                    false,
                    format!("epoch {}: burned fell {last_burned} -> {}", e.epoch, supply.burned),
                );
            }
            last_burned = supply.burned;
        }
    }
    Verdict::new(
        "conservation",
        true,
        format!("{epochs} epochs balanced, burned {last_burned}"),
    )
}

/// Metrics replayed from the log equal the live ones.
pub fn verify_replay(events: &[Event], live: &RunMetrics, cfg: &MetricsConfig) -> Verdict {
    let replay = metrics_from_events(events, cfg);
    let ok = &replay == live;
    Verdict::new(
        "event_log_sufficiency",
        ok,
        format!("{} epochs replayed, equal = {ok}", replay.len()),
    )
}

/// Same config and seed give byte-identical logs, across repeats and across
/// each thread count in `threads`.
pub fn verify_determinism(cfg: &ScenarioConfig, threads: &[usize]) -> Result<Verdict, HarnessError> {
    let log = |t: usize| -> Result<String, HarnessError> {
        let mut c = cfg.clone();
        c.run.threads = t;
        Ok(to_jsonl(&run_scenario(&c)?.events))
    };
    let first = log(cfg.run.threads)?;
    let mut same = log(cfg.run.threads)? == first;
    for &t in threads {
        same &= log(t)? == first;
    }
    Ok(Verdict::new(
        "determinism",
        same,
        format!(
            "{} bytes of events, repeat and threads {threads:?} identical = {same}",
            first.len()
        ),
    ))
}
