//! Centralized filter-and-score scheduler used as the comparison baseline.

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::metrics::{fear_premium, thermal_proxy, ThermalReport};
use crate::sim::{generate_workload, Job};
use crate::HarnessError;

/// Scan-cost queue model of a scheduler that inspects every node per job.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    /// Seconds to score one node.
    pub tau: f64,
    /// Job arrivals per second.
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum QueueLength {
    Finite(f64),
    /// `lambda >= mu`: the queue grows without bound.
    Divergent,
}

impl BaselineModel {
    /// Per-decision latency `N tau`.
    pub fn decision_latency(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    /// Service rate `1 / (N tau)`.
    pub fn mu(&self, n: usize) -> f64 {
        1.0 / self.decision_latency(n)
    }

    /// `L = lambda / (mu - lambda)` for a stable queue.
    pub fn queue_length(&self, n: usize) -> QueueLength {
        queue_length(self.lambda, self.mu(n))
    }
}

pub fn queue_length(lambda: f64, mu: f64) -> QueueLength {
    if lambda >= mu {
        QueueLength::Divergent
    } else {
        QueueLength::Finite(lambda / (mu - lambda))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselinePlan {
    /// `(job, node)` for every job, `None` when it stayed queued.
    pub placements: Vec<(u64, Option<usize>)>,
    pub decision_latency: f64,
    /// Completion time of the last decision with jobs served in order.
    pub makespan: f64,
    pub queue: QueueLength,
}

/// Best-fit placement of `jobs` (id, size) onto `free` capacities, in FIFO
/// order. A job that fits nowhere blocks everything behind it.
pub fn baseline_schedule(free: &[u64], jobs: &[(u64, u64)], model: &BaselineModel) -> BaselinePlan {
    let mut free = free.to_vec();
    let mut placements = Vec::with_capacity(jobs.len());
    let mut blocked = false;
    let mut decisions = 0usize;
    for &(job, size) in jobs {
        if blocked {
            placements.push((job, None));
            continue;
        }
        decisions += 1;
        let best = free
            .iter()
            .enumerate()
            .filter(|(_, &f)| f >= size)
            .min_by_key(|(i, &f)| (f, *i))
            .map(|(i, _)| i);
        match best {
            Some(i) => {
                free[i] -= size;
                placements.push((job, Some(i)));
            }
            None => {
                blocked = true;
                placements.push((job, None));
            }
        }
    }
    let n = free.len();
    BaselinePlan {
        placements,
        decision_latency: model.decision_latency(n),
        makespan: decisions as f64 * model.decision_latency(n),
        queue: model.queue_length(n),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineEpoch {
    pub epoch: u64,
    pub thermal: ThermalReport,
    pub alpha_hat: f64,
    pub alpha_plateau: f64,
    pub leased: u64,
    pub used: u64,
    pub queued: usize,
}

#[derive(Debug, Clone)]
struct Running {
    job: Job,
    node: usize,
    lease: u64,
    age: u64,
}

/// Replays the scenario workload through the baseline at epoch granularity:
/// each job leases `ceil((1 + alpha) * peak)` for its whole life.
pub fn run_baseline(cfg: &ScenarioConfig, alpha: f64) -> Result<Vec<BaselineEpoch>, HarnessError> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let n = cfg.domain.width * cfg.domain.height;
    let c = cfg.node.c_total;
    let usable = c - (c * 5).div_ceil(100);
    let model = BaselineModel {
        tau: cfg.baseline.tau,
        lambda: cfg.baseline.arrival_rate,
    };
    let mut jobs = generate_workload(cfg, seed).into_iter().peekable();
    let mut queue: Vec<Job> = Vec::new();
    let mut running: Vec<Running> = Vec::new();
    let mut used_cap = vec![0u64; n];
    let mut out = Vec::new();
    for epoch in 0..cfg.run.epochs {
        while jobs.peek().is_some_and(|j| j.arrive_epoch <= epoch) {
            queue.push(jobs.next().expect("peeked"));
        }
        let lease = |j: &Job| ((1.0 + alpha) * j.peak() as f64).ceil() as u64;
        let free: Vec<u64> = used_cap.iter().map(|u| usable - u).collect();
        let req: Vec<(u64, u64)> = queue.iter().map(|j| (j.id, lease(j))).collect();
        let plan = baseline_schedule(&free, &req, &model);
        let mut waiting = Vec::new();
        for (j, (_, node)) in queue.drain(..).zip(&plan.placements) {
            match node {
                Some(i) => {
                    let l = lease(&j);
                    used_cap[*i] += l;
                    running.push(Running {
                        job: j,
                        node: *i,
                        lease: l,
                        age: 0,
                    });
                }
                None => waiting.push(j),
            }
        }
        queue = waiting;

        for r in running.iter_mut() {
            r.age += 1;
        }
        running.retain(|r| {
            let done = r.age >= r.job.spec.lifetime;
            if done {
                used_cap[r.node] -= r.lease;
            }
            !done
        });
        let utils: Vec<f64> = used_cap.iter().map(|&u| u as f64 / c as f64).collect();
        let pairs = running.iter().map(|r| (r.lease, r.job.usage(r.age)));
        let plateau = running
            .iter()
            .filter(|r| r.age >= r.job.growth_epochs)
            .map(|r| (r.lease, r.job.usage(r.age)));
        out.push(BaselineEpoch {
            epoch,
            thermal: thermal_proxy(&utils, &cfg.metrics),
            alpha_hat: fear_premium(pairs),
            alpha_plateau: fear_premium(plateau),
            leased: running.iter().map(|r| r.lease).sum(),
            used: running.iter().map(|r| r.job.usage(r.age)).sum(),
            queued: queue.len(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_latency_and_queue() {
        let m = BaselineModel {
            tau: 1e-3,
            lambda: 9.0,
        };
        assert!((m.decision_latency(10) - 0.01).abs() < 1e-15);
        assert_eq!(queue_length(9.0, 10.0), QueueLength::Finite(9.0));
        assert_eq!(queue_length(10.0, 10.0), QueueLength::Divergent);
        let ratio = m.decision_latency(200) / m.decision_latency(100);
        assert!((ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn best_fit_and_head_of_line_blocking() {
        let m = BaselineModel {
            tau: 1.0,
            lambda: 0.0,
        };
        let plan = baseline_schedule(&[10, 4, 6], &[(0, 4), (1, 5), (2, 20), (3, 1)], &m);
        assert_eq!(plan.placements[0], (0, Some(1)));
        assert_eq!(plan.placements[1], (1, Some(2)));
        assert_eq!(plan.placements[2], (2, None));
        // blocked behind job 2 although it would fit
        assert_eq!(plan.placements[3], (3, None));
        // three decisions, each scanning three nodes
        assert_eq!(plan.makespan, 9.0);
    }

    #[test]
    fn hoarding_closes_the_loop() {
        let mut cfg = ScenarioConfig::seeded(5);
        cfg.run.epochs = 80;
        let run = run_baseline(&cfg, 0.4).unwrap();
        let tail: Vec<f64> = run[40..].iter().map(|e| e.alpha_plateau).collect();
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!((mean - 0.4).abs() < 0.05, "{mean}");
    }
}
