//! Over-provisioning of the market run against a hoarding baseline on the
//! same workload.

use serde::{Deserialize, Serialize};

use super::Verdict;
use crate::baseline::run_baseline;
use crate::config::ScenarioConfig;
use crate::events::EventBody;
use crate::sim::run_scenario;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FearReport {
    pub hoard_alpha: f64,
    /// Steady-state premium over plateaued agents.
    pub teg_alpha: f64,
    pub teg_alpha_all: f64,
    pub baseline_alpha: f64,
    pub teg_leased: f64,
    pub teg_used: f64,
    pub baseline_leased: f64,
    pub baseline_used: f64,
    /// Stranded capacity the market returns, as a fraction of what the
    /// baseline leases.
    pub released: f64,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Averages over the second half of the run.
pub fn measure_fear_premium(cfg: &ScenarioConfig) -> Result<FearReport, HarnessError> {
    let hoard = cfg.baseline.hoard_alpha;
    let out = run_scenario(cfg)?;
    let base = run_baseline(cfg, hoard)?;
    let from = cfg.run.epochs / 2;
    let teg = out.metrics.epochs.iter().filter(|e| e.epoch >= from);
    let teg_alpha = mean(teg.clone().map(|e| e.alpha_plateau));
    let teg_alpha_all = mean(teg.clone().map(|e| e.alpha_hat));
    let teg_leased = mean(teg.map(|e| e.leased as f64));
    let teg_used = mean(out.events.iter().filter_map(|e| match &e.body {
        EventBody::Epoch { seated, .. } if e.epoch >= from => Some(seated.iter().map(|s| s.used).sum::<u64>() as f64),
        _ => None,
    }));
    let b = base.iter().filter(|e| e.epoch >= from);
    let baseline_alpha = mean(b.clone().map(|e| e.alpha_plateau));
    let baseline_leased = mean(b.clone().map(|e| e.leased as f64));
    let baseline_used = mean(b.map(|e| e.used as f64));
    let stranded_base = baseline_leased - baseline_used;
    let stranded_teg = teg_leased - teg_used;
    Ok(FearReport {
        hoard_alpha: hoard,
        teg_alpha,
        teg_alpha_all,
        baseline_alpha,
        teg_leased,
        teg_used,
        baseline_leased,
        baseline_used,
        released: if baseline_leased > 0.0 {
            (stranded_base - stranded_teg) / baseline_leased
        } else {
            0.0
        },
    })
}

pub fn verify_fear(cfg: &ScenarioConfig) -> Result<(FearReport, Verdict), HarnessError> {
    let r = measure_fear_premium(cfg)?;
    let ok = r.teg_alpha < 0.1 && (r.baseline_alpha - r.hoard_alpha).abs() <= 0.05;
    let detail = format!(
        "market alpha {:.4} (all seated {:.4}) vs baseline {:.4} at hoarding {}; released {:.1}% of baseline lease",
        r.teg_alpha,
        r.teg_alpha_all,
        r.baseline_alpha,
        r.hoard_alpha,
        100.0 * r.released
    );
    Ok((r, Verdict::new("fear_premium", ok, detail)))
}
