//! Paired runs with and without the magnetic layer on multi-well fields at
//! zero temperature.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use teg_core::agents::{step_langevin, AgentSpec, AgentState, DynamicsParams, ForceField};
use teg_core::dualfield::{FieldState, FieldWeights, Grid, LatticeDomain, Vec2};
use teg_core::rng::stream_rng;

use super::Verdict;

const WELL_STREAM: u64 = 0x5745_4C4C;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumConfig {
    pub side: usize,
    /// Well counts of the fields to test, one field each.
    pub wells: Vec<usize>,
    pub agents_per_well: usize,
    pub sigma: f64,
    pub kappa_b: f64,
    pub dynamics: DynamicsParams,
    pub max_steps: u64,
    /// Converged once every agent is below both thresholds.
    pub grad_tol: f64,
    pub speed_tol: f64,
    pub seed: u64,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        Self {
            side: 24,
            wells: vec![3, 4, 5],
            agents_per_well: 8,
            sigma: 1.5,
            kappa_b: 2.0,
            dynamics: DynamicsParams {
                gamma: 0.5,
                temperature: 0.0,
                dt: 0.05,
                lookahead: 0.0,
                ..DynamicsParams::default()
            },
            max_steps: 60_000,
            grad_tol: 1e-4,
            speed_tol: 1e-6,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub converged: bool,
    pub steps: u64,
    pub max_grad: f64,
    pub occupied: BTreeSet<usize>,
    /// `sum gamma |v|^2 dt` over all agents.
    pub dissipation: f64,
    /// Initial minus final mechanical energy.
    pub energy_drop: f64,
    pub path_length: f64,
}

impl RunSummary {
    /// Work-energy mismatch of the integrator and the interpolated force.
    pub fn residual(&self) -> f64 {
        self.energy_drop - self.dissipation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedField {
    pub wells: Vec<usize>,
    pub plain: RunSummary,
    pub magnetic: RunSummary,
}

impl PairedField {
    pub fn same_attractors(&self) -> bool {
        self.plain.occupied == self.magnetic.occupied
    }

    pub fn dissipation_ok(&self) -> bool {
        self.magnetic.dissipation >= self.plain.dissipation
    }
}

fn well_centers(domain: &LatticeDomain, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, WELL_STREAM, k as u64);
    let side = domain.width() as i64;
    let mut out: Vec<(i64, i64)> = Vec::new();
    let mut tries = 0;
    while out.len() < k {
        tries += 1;
        assert!(tries < 100_000, "cannot place {k} wells on side {side}");
        let c = (rng.random_range(4..side - 4), rng.random_range(4..side - 4));
        if out
            .iter()
            .all(|o| (o.0 - c.0).pow(2) + (o.1 - c.1).pow(2) >= 49)
        {
            out.push(c);
        }
    }
    out.iter().map(|&(x, y)| domain.index(x as usize, y as usize)).collect()
}

fn bumps(domain: &LatticeDomain, centers: &[usize], sigma: f64, sign: f64) -> Grid<f64> {
    Grid::from_fn(domain, |x, y| {
        let p = Vec2::new(x as f64, y as f64);
        centers
            .iter()
            .map(|&c| sign * (-domain.distance_sq(p, domain.cell_center(c)) / (2.0 * sigma * sigma)).exp())
            .sum()
    })
}

/// Field with equal-depth wells at `centers`. The auction layer is a broader
/// bump over each well so the magnetic field is strongest where agents
/// settle.
pub fn multi_well(domain: &LatticeDomain, centers: &[usize], sigma: f64, kappa_b: f64) -> FieldState {
    let weights = FieldWeights {
        w1: 1.0,
        w2: 0.1,
        kappa_b,
        ..FieldWeights::default()
    };
    let s = bumps(domain, centers, sigma, -1.0);
    let h = bumps(domain, centers, 2.0 * sigma, 1.0);
    FieldState::assemble(s, h, None, &weights, 0).expect("matching shapes")
}

fn starts(domain: &LatticeDomain, centers: &[usize], per_well: usize, seed: u64) -> Vec<Vec2> {
    let mut rng = stream_rng(seed, WELL_STREAM + 1, centers.len() as u64);
    let mut out = Vec::new();
    for &c in centers {
        for _ in 0..per_well {
            let r = rng.random_range(0.5..2.5);
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            out.push(domain.cell_center(c) + Vec2::new(r * a.cos(), r * a.sin()));
        }
    }
    out
}

/// Integrates every agent until all have settled or `max_steps` runs out.
pub fn settle(
    force: &ForceField,
    starts: &[Vec2],
    vel: Vec2,
    params: &DynamicsParams,
    max_steps: u64,
    grad_tol: f64,
    speed_tol: f64,
) -> RunSummary {
    let spec = AgentSpec::default();
    let mut rng = stream_rng(0, 0, 0);
    let energy = |a: &AgentState| force.potential(a.pos) + a.kinetic_energy();
    let mut agents: Vec<AgentState> = starts
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut a = AgentState::new(i as u64, &spec, params, p);
            a.vel = vel;
            a
        })
        .collect();
    let e0: f64 = agents.iter().map(energy).sum();
    let gamma = params.gamma.max(0.0);
    let (mut dissipation, mut path) = (0.0, 0.0);
    let mut steps = 0;
    let done = |agents: &[AgentState]| {
        agents
            .iter()
            .all(|a| force.gradient(a.pos).norm() < grad_tol && a.vel.norm() < speed_tol)
    };
    while steps < max_steps && !done(&agents) {
        for a in agents.iter_mut() {
            let next = step_langevin(a, force, params, &mut rng).expect("finite flight");
            dissipation += gamma * next.vel.norm_sq() * params.dt;
            path += force.domain().displacement(a.pos, next.pos).norm();
            *a = next;
        }
        steps += 1;
    }
    let e1: f64 = agents.iter().map(energy).sum();
    RunSummary {
        converged: done(&agents),
        steps,
        max_grad: agents.iter().map(|a| force.gradient(a.pos).norm()).fold(0.0, f64::max),
        occupied: agents.iter().map(|a| force.domain().nearest_cell(a.pos)).collect(),
        dissipation,
        energy_drop: e0 - e1,
        path_length: path,
    }
}

pub fn paired_runs(cfg: &EquilibriumConfig) -> Vec<PairedField> {
    let domain = LatticeDomain::new(cfg.side, cfg.side, false).expect("non-empty");
    cfg.wells
        .iter()
        .map(|&k| {
            let centers = well_centers(&domain, k, cfg.seed);
            let x0 = starts(&domain, &centers, cfg.agents_per_well, cfg.seed);
            let run = |kappa: f64| {
                let field = multi_well(&domain, &centers, cfg.sigma, kappa);
                let force = ForceField::from_state(&field, &domain, cfg.dynamics.lookahead);
                settle(
                    &force,
                    &x0,
                    Vec2::ZERO,
                    &cfg.dynamics,
                    cfg.max_steps,
                    cfg.grad_tol,
                    cfg.speed_tol,
                )
            };
            PairedField {
                wells: centers.clone(),
                plain: run(0.0),
                magnetic: run(cfg.kappa_b),
            }
        })
        .collect()
}

pub fn verify_equilibrium(cfg: &EquilibriumConfig) -> (Vec<PairedField>, Verdict) {
    let pairs = paired_runs(cfg);
    let mut ok = pairs.len() >= 3;
    let mut parts = Vec::new();
    for p in &pairs {
        let good = p.plain.converged
            && p.magnetic.converged
            && p.plain.max_grad < 1e-3
            && p.magnetic.max_grad < 1e-3
            && p.same_attractors()
            && p.dissipation_ok();
        ok &= good;
        parts.push(format!(
            "{} wells: same set {}, grad {:.1e}/{:.1e}, D {:.6}/{:.6} (residual {:.1e}/{:.1e}), path {:.1}/{:.1}",
            p.wells.len(),
            p.same_attractors(),
            p.plain.max_grad,
            p.magnetic.max_grad,
            p.plain.dissipation,
            p.magnetic.dissipation,
            p.plain.residual(),
            p.magnetic.residual(),
            p.plain.path_length,
            p.magnetic.path_length,
        ));
    }
    (pairs, Verdict::new("magnetic_equilibrium", ok, parts.join("; ")))
}

/// Free gyration: flat potential, no drag, uniform field. The agent never
/// settles; the run is reported as not converged rather than failed.
pub fn orbit_case(steps: u64) -> RunSummary {
    let domain = LatticeDomain::new(32, 32, true).expect("non-empty");
    let force = ForceField::new(Grid::filled(&domain, 0.0), Grid::filled(&domain, 1.0), &domain);
    let params = DynamicsParams {
        gamma: 0.0,
        temperature: 0.0,
        dt: 0.01,
        ..DynamicsParams::default()
    };
    settle(
        &force,
        &[Vec2::new(16.0, 16.0)],
        Vec2::new(1.0, 0.0),
        &params,
        steps,
        1e-4,
        1e-6,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_small_field_pairs_up() {
        let cfg = EquilibriumConfig {
            wells: vec![3],
            agents_per_well: 2,
            ..Default::default()
        };
        let pairs = paired_runs(&cfg);
        let p = &pairs[0];
        assert!(p.plain.converged && p.magnetic.converged);
        assert!(p.same_attractors());
        assert_eq!(p.plain.occupied.len(), 3);
        assert!(p.magnetic.path_length > 0.0);
    }

    #[test]
    fn orbit_never_converges() {
        let r = orbit_case(5000);
        assert!(!r.converged);
        assert_eq!(r.dissipation, 0.0);
        // rotation preserves speed, so no energy is lost
        assert!(r.energy_drop.abs() < 1e-9);
    }
}
