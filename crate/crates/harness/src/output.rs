//! Run directory layout: `events.jsonl`, `metrics.csv`, `summary.json`.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::events::write_jsonl;
use crate::metrics::RunMetrics;
use crate::sim::RunOutput;
use crate::verify::Verdict;
use crate::HarnessError;

fn io(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(e.to_string())
}

/// Final aggregates of a run.
pub fn summarize(out: &RunOutput) -> Value {
    let m = &out.metrics;
    let last = m.epochs.last().copied().unwrap_or_default();
    let mean = |f: fn(&crate::metrics::EpochMetrics) -> f64| {
        if m.is_empty() {
            0.0
        } else {
            m.epochs.iter().map(f).sum::<f64>() / m.len() as f64
        }
    };
    json!({
        "epochs": m.len(),
        "jobs": out.jobs,
        "events": out.events.len(),
        "supply": out.supply,
        "balanced": out.supply.balanced(),
        "final_unplaced": last.unplaced,
        "mean_utilization": mean(|e| e.utilization),
        "mean_util_variance": mean(|e| e.util_variance),
        "mean_cop": mean(|e| e.cop),
        "mean_alpha_hat": mean(|e| e.alpha_hat),
        "evictions": m.epochs.iter().map(|e| e.evictions).sum::<u64>(),
        "airlocks": m.epochs.iter().map(|e| e.airlocks).sum::<u64>(),
        "max_re": m.epochs.iter().map(|e| e.re).fold(0.0, f64::max),
    })
}

pub fn write_metrics(dir: &Path, metrics: &RunMetrics) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io)?;
    let f = fs::File::create(dir.join("metrics.csv")).map_err(io)?;
    metrics.write_csv(BufWriter::new(f))
}

pub fn write_summary(dir: &Path, summary: &impl Serialize) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io)?;
    let text = serde_json::to_string_pretty(summary).map_err(io)?;
    fs::write(dir.join("summary.json"), text + "\n").map_err(io)
}

/// Writes all three artifacts of a run.
pub fn write_run(dir: &Path, out: &RunOutput, verdicts: &[Verdict]) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io)?;
    let f = fs::File::create(dir.join("events.jsonl")).map_err(io)?;
    write_jsonl(&out.events, BufWriter::new(f))?;
    write_metrics(dir, &out.metrics)?;
    let mut s = summarize(out);
    s["verdicts"] = serde_json::to_value(verdicts).map_err(io)?;
    write_summary(dir, &s)
}
