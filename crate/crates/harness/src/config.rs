//! Scenario configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use teg_core::agents::{AgentSpec, DynamicsParams, JitPolicy};
use teg_core::dualfield::{FieldWeights, GprParams};
use teg_core::governor::GovernorParams;
use teg_core::LatticeDomain;

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Mandatory; there is no wall-clock fallback.
    pub seed: Option<u64>,
    pub epochs: u64,
    /// Micro-batches (ticks) per epoch.
    pub ticks_per_epoch: u32,
    /// Worker threads for agent stepping. Output does not depend on it.
    pub threads: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            epochs: 200,
            ticks_per_epoch: 100,
            threads: 1,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub width: usize,
    pub height: usize,
    pub wrap: bool,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            width: 16,
            height: 16,
            wrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZoneConfig {
    /// Zones along each axis; every zone is a square power-of-two tile.
    pub per_side: usize,
    /// Switch radix M: candidate zones an agent probes per placement round.
    pub radix: usize,
    pub ring_capacity: usize,
}

impl Default for ZoneConfig {
    fn default() -> Self {
        Self {
            per_side: 2,
            radix: 4,
            ring_capacity: 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arrival {
    /// Whole population at epoch 0.
    Batch,
    /// Initial population plus Poisson arrivals every epoch.
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub agents: usize,
    pub whale_fraction: f64,
    pub whale: AgentSpec,
    pub shrimp: AgentSpec,
    pub arrival: Arrival,
    /// Mean arrivals per epoch for `poisson`.
    pub arrival_rate: f64,
    /// Epochs of linear growth before usage plateaus.
    pub growth_epochs: u64,
    /// Epochs a flying agent may stay broke before giving up.
    pub bankrupt_grace: u64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self {
            agents: 64,
            whale_fraction: 0.125,
            whale: AgentSpec {
                mem_size: 24,
                e_init: 4000,
                sla_prio: 2.0,
                risk_factor: 0.5,
                consumption_rate: 1.0,
                lifetime: 120,
            },
            shrimp: AgentSpec {
                mem_size: 8,
                e_init: 1000,
                sla_prio: 1.0,
                risk_factor: 0.0,
                consumption_rate: 0.5,
                lifetime: 60,
            },
            arrival: Arrival::Poisson,
            arrival_rate: 0.5,
            growth_epochs: 16,
            bankrupt_grace: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub weights: FieldWeights,
    pub gpr: GprParams,
    /// Node utilizations sampled per epoch for the projection.
    pub samples: usize,
    /// Heat-map decay per tick.
    pub heat_lambda: f64,
    /// Multiplier from utilization to physical entropy.
    pub entropy_scale: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            weights: FieldWeights {
                w1: 1.0,
                w2: 0.05,
                price_k: 40.0,
                eps_price: 0.05,
                kappa_b: 0.05,
            },
            gpr: GprParams {
                lengthscale: 2.0,
                signal_variance: 1.0,
                noise_variance: 0.05,
                prior_mean: 0.0,
            },
            samples: 32,
            heat_lambda: 0.2,
            entropy_scale: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedgerConfig {
    /// Scale of the convex memory price.
    pub k_mem: f64,
    pub c_txn: u64,
    pub mu_friction: f64,
    /// Share of the wallet a probe may advertise.
    pub probe_fraction: f64,
    /// Ticks between probes of one agent.
    pub probe_interval: u64,
    /// Speed below which a flying agent starts probing.
    pub settle_speed: f64,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        Self {
            k_mem: 60.0,
            c_txn: 1,
            mu_friction: 0.1,
            probe_fraction: 0.5,
            probe_interval: 10,
            settle_speed: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeConfig {
    pub c_total: u64,
}

impl Default for NodeConfig {
    fn default() -> Self {
        Self { c_total: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Per-node scan cost in seconds.
    pub tau: f64,
    /// Job arrivals per second for the queue model.
    pub arrival_rate: f64,
    /// Static over-provisioning of baseline requests.
    pub hoard_alpha: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            tau: 1e-3,
            arrival_rate: 1.0,
            hoard_alpha: 0.4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Weight of the cost functional diagnostic.
    pub lambda_j: f64,
    pub cop_max: f64,
    pub cop_min: f64,
    pub cop_slope: f64,
    pub power_per_util: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            lambda_j: 0.5,
            cop_max: 3.5,
            cop_min: 2.5,
            cop_slope: 1.0,
            power_per_util: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub run: RunConfig,
    pub domain: DomainConfig,
    pub zones: ZoneConfig,
    pub population: PopulationConfig,
    pub dynamics: DynamicsParams,
    pub field: FieldConfig,
    pub ledger: LedgerConfig,
    pub node: NodeConfig,
    pub jit: JitPolicy,
    pub governor: GovernorParams,
    pub baseline: BaselineConfig,
    pub metrics: MetricsConfig,
}

impl ScenarioConfig {
    /// Defaults with a seed set.
    pub fn seeded(seed: u64) -> Self {
        let mut c = Self::default();
        c.run.seed = Some(seed);
        c
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seed(&self) -> Result<u64, HarnessError> {
        self.run
            .seed
            .ok_or_else(|| HarnessError::Config("run.seed is required".into()))
    }

    pub fn lattice(&self) -> Result<LatticeDomain, HarnessError> {
        LatticeDomain::new(self.domain.width, self.domain.height, self.domain.wrap)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Side of one zone tile.
    pub fn zone_side(&self) -> usize {
        self.domain.width / self.zones.per_side.max(1)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        self.seed()?;
        self.lattice()?;
        let (w, h, k) = (self.domain.width, self.domain.height, self.zones.per_side);
        if w != h {
            return bad(format!("zones need a square lattice, got {w}x{h}"));
        }
        if k == 0 || w % k != 0 {
            return bad(format!("{k} zones per side do not tile width {w}"));
        }
        if !self.zone_side().is_power_of_two() {
            return bad(format!("zone side {} is not a power of two", self.zone_side()));
        }
        if self.zones.radix == 0 || self.zones.ring_capacity == 0 {
            return bad("radix and ring capacity must be positive".into());
        }
        if self.run.ticks_per_epoch == 0 || self.run.threads == 0 {
            return bad("ticks_per_epoch and threads must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.population.whale_fraction) || self.population.arrival_rate < 0.0 {
            return bad("population mix out of range".into());
        }
        if self.node.c_total == 0 {
            return bad("node capacity must be positive".into());
        }
        if self.field.samples == 0 || !(self.field.heat_lambda > 0.0 && self.field.heat_lambda <= 1.0) {
            return bad("field sampling parameters out of range".into());
        }
        if !(self.ledger.k_mem > 0.0) || !(0.0..=1.0).contains(&self.ledger.probe_fraction) {
            return bad("ledger parameters out of range".into());
        }
        if !(self.jit.holding_tax > 0.0) {
            return bad("holding tax must be positive".into());
        }
        let m = &self.metrics;
        if !(m.cop_min > 0.0 && m.cop_min <= m.cop_max && m.cop_slope >= 0.0) {
            return bad("COP model out of range".into());
        }
        self.dynamics
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.field
            .weights
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.field
            .gpr
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.governor
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    /// Sets one value by dotted key, e.g. `ledger.k_mem = 30`.
    pub fn set_param(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let mut doc = toml::Value::try_from(&*self).map_err(|e| HarnessError::Config(e.to_string()))?;
        let parsed: toml::Value = parse_scalar(value);
        let parts: Vec<&str> = key.split('.').collect();
        set_path(&mut doc, &parts, parsed).map_err(|m| HarnessError::Config(format!("{key}: {m}")))?;
        *self = doc
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(format!("{key}={value}: {e}")))?;
        Ok(())
    }
}

fn set_path(node: &mut toml::Value, path: &[&str], value: toml::Value) -> Result<(), String> {
    let table = node.as_table_mut().ok_or("not a table")?;
    match path {
        [] => Err("empty key".into()),
        [last] => {
            let v = match (table.get(*last), value) {
                (Some(toml::Value::Float(_)), toml::Value::Integer(n)) => toml::Value::Float(n as f64),
                (_, v) => v,
            };
            table.insert((*last).to_string(), v);
            Ok(())
        }
        [head, rest @ ..] => {
            let child = table
                .entry((*head).to_string())
                .or_insert_with(|| toml::Value::Table(Default::default()));
            set_path(child, rest, value)
        }
    }
}

fn parse_scalar(v: &str) -> toml::Value {
    let v = v.trim();
    if let Ok(i) = v.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = v.parse::<f64>() {
        toml::Value::Float(f)
    } else if let Ok(b) = v.parse::<bool>() {
        toml::Value::Boolean(b)
    } else {
        toml::Value::String(v.trim_matches('"').to_string())
    }
}

/// Expands a sweep range: `a:b:n` (n evenly spaced values), `a..b` (integer
/// steps) or a comma list.
pub fn parse_range(spec: &str) -> Result<Vec<String>, HarnessError> {
    let bad = || HarnessError::Config(format!("bad range {spec:?}"));
    if let Some((a, b)) = spec.split_once("..") {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).map(|v| v.to_string()).collect());
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let a: f64 = parts[0].parse().map_err(|_| bad())?;
        let b: f64 = parts[1].parse().map_err(|_| bad())?;
        let n: usize = parts[2].parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        if n == 1 {
            return Ok(vec![format!("{a}")]);
        }
        return Ok((0..n)
            .map(|i| format!("{}", a + (b - a) * i as f64 / (n - 1) as f64))
            .collect());
    }
    let list: Vec<String> = spec.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if list.is_empty() {
        Err(bad())
    } else {
        Ok(list)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_need_a_seed() {
        assert!(ScenarioConfig::default().validate().is_err());
        ScenarioConfig::seeded(1).validate().unwrap();
    }

    #[test]
    fn toml_roundtrip_and_partial_sections() {
        let c = ScenarioConfig::from_toml("[run]\nseed = 7\nepochs = 3\n[node]\nc_total = 32\n").unwrap();
        assert_eq!(c.run.seed, Some(7));
        assert_eq!(c.run.epochs, 3);
        assert_eq!(c.node.c_total, 32);
        assert_eq!(c.domain, DomainConfig::default());
        let back = ScenarioConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert!(ScenarioConfig::from_toml("[run]\nsed = 1\n").is_err());
    }

    #[test]
    fn zones_must_tile() {
        let mut c = ScenarioConfig::seeded(1);
        c.zones.per_side = 3;
        assert!(c.validate().is_err());
        c.zones.per_side = 4;
        c.validate().unwrap();
        c.domain.width = 24;
        c.domain.height = 24;
        c.zones.per_side = 2;
        // side 12 is not a power of two
        assert!(c.validate().is_err());
    }

    #[test]
    fn set_param_by_dotted_key() {
        let mut c = ScenarioConfig::seeded(1);
        c.set_param("ledger.k_mem", "30").unwrap();
        assert_eq!(c.ledger.k_mem, 30.0);
        c.set_param("governor.landau.re_c", "12.5").unwrap();
        assert_eq!(c.governor.landau.re_c, 12.5);
        c.set_param("run.seed", "9").unwrap();
        assert_eq!(c.run.seed, Some(9));
        assert!(c.set_param("ledger.nope", "1").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1..3").unwrap(), vec!["1", "2", "3"]);
        assert_eq!(parse_range("0:1:3").unwrap(), vec!["0", "0.5", "1"]);
        assert_eq!(parse_range("a, b").unwrap(), vec!["a", "b"]);
        assert!(parse_range("3..1").is_err());
    }
}
