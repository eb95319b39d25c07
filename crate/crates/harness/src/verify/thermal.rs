//! Node-utilization spread of the market run against greedy best-fit
//! packing of the identical workload.

use serde::{Deserialize, Serialize};

use super::Verdict;
use crate::baseline::run_baseline;
use crate::config::ScenarioConfig;
use crate::sim::run_scenario;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalRow {
    pub seed: u64,
    pub teg_variance: f64,
    pub packed_variance: f64,
    pub teg_cop: (f64, f64),
    pub teg_energy: f64,
    pub packed_energy: f64,
}

fn band(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Means over the whole run; the packing baseline leases exactly the peak.
pub fn thermal_row(cfg: &ScenarioConfig) -> Result<ThermalRow, HarnessError> {
    let out = run_scenario(cfg)?;
    let packed = run_baseline(cfg, 0.0)?;
    let m = &out.metrics;
    let n = m.len().max(1) as f64;
    let pn = packed.len().max(1) as f64;
    Ok(ThermalRow {
        seed: cfg.seed()?,
        teg_variance: m.epochs.iter().map(|e| e.util_variance).sum::<f64>() / n,
        packed_variance: packed.iter().map(|e| e.thermal.variance).sum::<f64>() / pn,
        teg_cop: band(m.epochs.iter().map(|e| e.cop)),
        teg_energy: m.epochs.iter().map(|e| e.energy).sum::<f64>(),
        packed_energy: packed.iter().map(|e| e.thermal.energy).sum::<f64>(),
    })
}

pub fn verify_thermal(cfg: &ScenarioConfig, seeds: &[u64]) -> Result<(Vec<ThermalRow>, Verdict), HarnessError> {
    let mut rows = Vec::new();
    for &s in seeds {
        let mut c = cfg.clone();
        c.run.seed = Some(s);
        rows.push(thermal_row(&c)?);
    }
    let (lo, hi) = (cfg.metrics.cop_min, cfg.metrics.cop_max);
    let below = rows.iter().filter(|r| r.teg_variance < r.packed_variance).count();
    let cop_ok = rows.iter().all(|r| r.teg_cop.0 >= lo && r.teg_cop.1 <= hi);
    let cop = band(rows.iter().flat_map(|r| [r.teg_cop.0, r.teg_cop.1]));
    let saving = rows
        .iter()
        .map(|r| 1.0 - r.teg_energy / r.packed_energy.max(f64::MIN_POSITIVE))
        .sum::<f64>()
        / rows.len().max(1) as f64;
    let shown: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.4}/{:.4}", r.teg_variance, r.packed_variance))
        .collect();
    let detail = format!(
        "variance below packing in {below}/{} seeds, market/packed [{}]; COP in [{:.3}, {:.3}]; energy proxy change {:+.1}% (not asserted)",
        rows.len(),
        shown.join(" "),
        cop.0,
        cop.1,
        -100.0 * saving
    );
    let ok = !rows.is_empty() && below == rows.len() && cop_ok;
    Ok((rows, Verdict::new("thermal_spread", ok, detail)))
}
