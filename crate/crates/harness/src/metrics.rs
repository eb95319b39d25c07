//! Per-epoch metrics, derived only from the event log.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use teg_core::agents::{AgentId, Phase};

use crate::config::MetricsConfig;
use crate::events::{AgentEventKind, Event, EventBody, SeatedRow};
use crate::HarnessError;

/// Column order of `metrics.csv`.
pub const COLUMNS: [&str; 20] = [
    "epoch",
    "placements",
    "latency_mean",
    "latency_max",
    "unplaced",
    "utilization",
    "util_variance",
    "t_hot",
    "cop",
    "energy",
    "re",
    "sdot",
    "gamma",
    "burned",
    "evictions",
    "airlocks",
    "alpha_hat",
    "alpha_plateau",
    "leased",
    "cost_j",
];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: u64,
    pub placements: u64,
    /// Ticks from entering flight to being seated.
    pub latency_mean: f64,
    pub latency_max: u64,
    /// Agents still in flight at the end of the epoch.
    pub unplaced: u64,
    pub utilization: f64,
    pub util_variance: f64,
    pub t_hot: f64,
    pub cop: f64,
    pub energy: f64,
    pub re: f64,
    pub sdot: f64,
    pub gamma: f64,
    /// Cumulative burned tokens.
    pub burned: u64,
    pub evictions: u64,
    pub airlocks: u64,
    /// Mean over seated agents of `(leased - used) / used`.
    pub alpha_hat: f64,
    /// The same over agents whose usage has plateaued.
    pub alpha_plateau: f64,
    /// Total leased units.
    pub leased: u64,
    /// Mean of `phi(seat) + lambda * flight friction` over this epoch's
    /// placements.
    pub cost_j: f64,
}

impl EpochMetrics {
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.epoch,
            self.placements,
            self.latency_mean,
            self.latency_max,
            self.unplaced,
            self.utilization,
            self.util_variance,
            self.t_hot,
            self.cop,
            self.energy,
            self.re,
            self.sdot,
            self.gamma,
            self.burned,
            self.evictions,
            self.airlocks,
            self.alpha_hat,
            self.alpha_plateau,
            self.leased,
            self.cost_j
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    pub epochs: Vec<EpochMetrics>,
}

impl RunMetrics {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn series(&self, f: impl Fn(&EpochMetrics) -> f64) -> Vec<f64> {
        self.epochs.iter().map(f).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), HarnessError> {
        let io = |e: std::io::Error| HarnessError::Io(e.to_string());
        writeln!(w, "{}", COLUMNS.join(",")).map_err(io)?;
        for row in &self.epochs {
            writeln!(w, "{}", row.csv_row()).map_err(io)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8")
    }
}

/// Temperature proxy and cooling efficiency of one utilization vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThermalReport {
    pub mean: f64,
    pub variance: f64,
    /// Hottest node utilization.
    pub t_hot: f64,
    pub cop: f64,
    pub energy: f64,
}

/// Linear COP with clamps: `cop_max - slope * u`, floored at `cop_min`.
pub fn cop(u: f64, m: &MetricsConfig) -> f64 {
    (m.cop_max - m.cop_slope * u).clamp(m.cop_min, m.cop_max)
}

pub fn thermal_proxy(utils: &[f64], m: &MetricsConfig) -> ThermalReport {
    if utils.is_empty() {
        return ThermalReport {
            cop: m.cop_max,
            ..Default::default()
        };
    }
    let n = utils.len() as f64;
    let mean = utils.iter().sum::<f64>() / n;
    let variance = utils.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / n;
    let t_hot = utils.iter().copied().fold(0.0, f64::max);
    let c = cop(t_hot, m);
    let energy = m.power_per_util * utils.iter().sum::<f64>() / c;
    ThermalReport {
        mean,
        variance,
        t_hot,
        cop: c,
        energy,
    }
}

/// Mean over-provisioning of `(leased, used)` pairs with `used > 0`.
pub fn fear_premium(pairs: impl IntoIterator<Item = (u64, u64)>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (leased, used) in pairs {
        if used > 0 {
            sum += (leased as f64 - used as f64) / used as f64;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Streaming reducer from events to metric rows. The live run and the
/// offline replay feed it the same records.
#[derive(Debug, Clone)]
pub struct MetricsBuilder {
    cfg: MetricsConfig,
    flight_since: BTreeMap<AgentId, u64>,
    phase: BTreeMap<AgentId, Phase>,
    latencies: Vec<u64>,
    j_sum: f64,
    j_n: u64,
    evictions: u64,
    airlocks: u64,
    governor: Option<(f64, f64, f64)>,
    out: RunMetrics,
}

impl MetricsBuilder {
    pub fn new(cfg: MetricsConfig) -> Self {
        Self {
            cfg,
            flight_since: BTreeMap::new(),
            phase: BTreeMap::new(),
            latencies: vec![],
            j_sum: 0.0,
            j_n: 0,
            evictions: 0,
            airlocks: 0,
            governor: None,
            out: RunMetrics::default(),
        }
    }

    pub fn push(&mut self, e: &Event) {
        match &e.body {
            EventBody::Agent {
                agent, phase, event, ..
            } => {
                self.phase.insert(*agent, *phase);
                if event.starts_flight() {
                    self.flight_since.insert(*agent, e.tick);
                }
                match event {
                    AgentEventKind::Seat => {
                        let start = self.flight_since.remove(agent).unwrap_or(e.tick);
                        self.latencies.push(e.tick - start);
                    }
                    AgentEventKind::Evicted => self.evictions += 1,
                    _ => {}
                }
            }
            EventBody::Placed { phi, work, .. } => {
                self.j_sum += phi + self.cfg.lambda_j * work;
                self.j_n += 1;
            }
            EventBody::Airlock { .. } => self.airlocks += 1,
            EventBody::Governor {
                re,
                sdot,
                gamma_broadcast,
                ..
            } => self.governor = Some((*re, *sdot, *gamma_broadcast)),
            EventBody::Epoch {
                allocated,
                c_total,
                seated,
                supply,
            } => self.close_epoch(e.epoch, allocated, *c_total, seated, supply.burned),
            EventBody::Settlement { .. } | EventBody::Node { .. } => {}
        }
    }

    fn close_epoch(
        &mut self,
        epoch: u64,
        allocated: &[u64],
        c_total: u64,
        seated: &[SeatedRow],
        burned: u64,
    ) {
        let utils: Vec<f64> = allocated.iter().map(|&a| a as f64 / c_total as f64).collect();
        let th = thermal_proxy(&utils, &self.cfg);
        let (re, sdot, gamma) = self.governor.take().unwrap_or((0.0, 0.0, 0.0));
        let lat = std::mem::take(&mut self.latencies);
        let unplaced = self.phase.values().filter(|p| **p == Phase::Flight).count() as u64;
        let row = EpochMetrics {
            epoch,
            placements: lat.len() as u64,
            latency_mean: if lat.is_empty() {
                0.0
            } else {
                lat.iter().sum::<u64>() as f64 / lat.len() as f64
            },
            latency_max: lat.iter().copied().max().unwrap_or(0),
            unplaced,
            utilization: th.mean,
            util_variance: th.variance,
            t_hot: th.t_hot,
            cop: th.cop,
            energy: th.energy,
            re,
            sdot,
            gamma,
            burned,
            evictions: std::mem::take(&mut self.evictions),
            airlocks: std::mem::take(&mut self.airlocks),
            alpha_hat: fear_premium(seated.iter().map(|s| (s.leased, s.used))),
            alpha_plateau: fear_premium(seated.iter().filter(|s| s.plateau).map(|s| (s.leased, s.used))),
            leased: seated.iter().map(|s| s.leased).sum(),
            cost_j: if self.j_n == 0 { 0.0 } else { self.j_sum / self.j_n as f64 },
        };
        self.j_sum = 0.0;
        self.j_n = 0;
        self.out.epochs.push(row);
    }

    pub fn finish(self) -> RunMetrics {
        self.out
    }
}

/// Replays a log into metrics.
pub fn metrics_from_events(events: &[Event], cfg: &MetricsConfig) -> RunMetrics {
    let mut b = MetricsBuilder::new(*cfg);
    for e in events {
        b.push(e);
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_load_is_the_cold_extreme() {
        let m = MetricsConfig::default();
        let flat = thermal_proxy(&[0.5; 8], &m);
        assert_eq!(flat.variance, 0.0);
        let mut hot = vec![0.0; 8];
        hot[3] = 4.0;
        let skew = thermal_proxy(&hot, &m);
        assert!(skew.variance > flat.variance);
        assert_eq!(skew.cop, m.cop_min);
        assert!(flat.cop > skew.cop);
    }

    #[test]
    fn cop_endpoints() {
        let m = MetricsConfig::default();
        assert_eq!(cop(0.0, &m), 3.5);
        assert_eq!(cop(1.0, &m), 2.5);
        assert_eq!(cop(0.4, &m), 3.1);
        assert_eq!(cop(7.0, &m), 2.5);
    }

    #[test]
    fn fear_premium_examples() {
        assert_eq!(fear_premium([(14, 10), (28, 20)]), 0.4);
        assert_eq!(fear_premium([(5, 0)]), 0.0);
        assert_eq!(fear_premium([]), 0.0);
    }

    #[test]
    fn empty_log_gives_header_only() {
        let m = metrics_from_events(&[], &MetricsConfig::default());
        assert!(m.is_empty());
        assert_eq!(m.to_csv(), format!("{}\n", COLUMNS.join(",")));
    }
}
