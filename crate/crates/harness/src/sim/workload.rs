use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use teg_core::agents::{AgentId, AgentSpec};
use teg_core::rng::stream_rng;

use crate::config::{Arrival, ScenarioConfig};

const WORKLOAD_STREAM: u64 = 0x574B_4C44 << 24;

/// One workload arrival, shared by the market run and the baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: AgentId,
    pub arrive_epoch: u64,
    pub spec: AgentSpec,
    pub growth_epochs: u64,
}

impl Job {
    /// Memory in use after `age` epochs of progress.
    pub fn usage(&self, age: u64) -> u64 {
        usage(&self.spec, self.growth_epochs, age)
    }

    pub fn peak(&self) -> u64 {
        self.usage(self.growth_epochs)
    }
}

/// `mem + floor(R * min(age, growth))`.
pub fn usage(spec: &AgentSpec, growth_epochs: u64, age: u64) -> u64 {
    let grown = (spec.consumption_rate.max(0.0) * age.min(growth_epochs) as f64).floor() as u64;
    spec.mem_size + grown
}

/// Every arrival of the run, in id order.
pub fn generate_workload(cfg: &ScenarioConfig, seed: u64) -> Vec<Job> {
    let p = &cfg.population;
    let mut rng = stream_rng(seed, WORKLOAD_STREAM, 0);
    let mut jobs = Vec::new();
    let push = |epoch: u64, rng: &mut dyn rand::RngCore, jobs: &mut Vec<Job>| {
        let spec = if rng.random::<f64>() < p.whale_fraction {
            p.whale.clone()
        } else {
            p.shrimp.clone()
        };
        jobs.push(Job {
            id: jobs.len() as AgentId,
            arrive_epoch: epoch,
            spec,
            growth_epochs: p.growth_epochs,
        });
    };
    for _ in 0..p.agents {
        push(0, &mut rng, &mut jobs);
    }
    if p.arrival == Arrival::Poisson && p.arrival_rate > 0.0 {
        let pois = Poisson::new(p.arrival_rate).expect("positive rate");
        for epoch in 1..cfg.run.epochs {
            let k: f64 = pois.sample(&mut rng);
            for _ in 0..k as u64 {
                push(epoch, &mut rng, &mut jobs);
            }
        }
    }
    jobs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_plateaus() {
        let spec = AgentSpec {
            mem_size: 8,
            consumption_rate: 0.5,
            ..AgentSpec::default()
        };
        assert_eq!(usage(&spec, 10, 0), 8);
        assert_eq!(usage(&spec, 10, 3), 9);
        assert_eq!(usage(&spec, 10, 10), 13);
        assert_eq!(usage(&spec, 10, 500), 13);
    }

    #[test]
    fn workload_is_seeded() {
        let cfg = ScenarioConfig::seeded(3);
        let a = generate_workload(&cfg, 3);
        assert_eq!(a, generate_workload(&cfg, 3));
        assert_ne!(a, generate_workload(&cfg, 4));
        assert!(a.len() >= cfg.population.agents);
        assert!(a.windows(2).all(|w| w[0].arrive_epoch <= w[1].arrive_epoch));
    }
}
