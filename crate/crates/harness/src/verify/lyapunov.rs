//! Energy-function check for agents settling into a quadratic attractor.

use serde::{Deserialize, Serialize};
use teg_core::agents::{step_langevin, AgentSpec, AgentState, DynamicsParams, ForceField};
use teg_core::dualfield::{Grid, LatticeDomain, Vec2};
use teg_core::rng::stream_rng;

use super::Verdict;

/// Largest allowed increase of `V` between samples after the transient.
pub const MONOTONE_TOL: f64 = 1e-6;
/// Allowed RMS relative error between `dV/dt` and `-gamma |e'|^2`.
pub const RATE_TOL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    /// Offset from the attractor.
    pub e: Vec2,
    pub e_dot: Vec2,
    /// Damping in effect over the step ending at this sample.
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovStatus {
    Monotone,
    Growth,
    RateMismatch,
    /// The local fit was too poor for `V` to mean anything.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub status: LyapunovStatus,
    pub k_p: f64,
    pub v_initial: f64,
    pub v_final: f64,
    pub max_increase: f64,
    pub rate_rms: f64,
}

/// Least-squares quadratic on the 3x3 stencil around `node`. Returns the
/// mean curvature and the RMS fit residual relative to the stencil range.
/// The stencil polynomials `1, x, y, x^2 - 2/3, y^2 - 2/3, xy` are
/// orthogonal on `{-1, 0, 1}^2`, so the fit is a set of projections.
pub fn fit_curvature(grid: &Grid<f64>, domain: &LatticeDomain, node: usize) -> Option<(f64, f64)> {
    let (cx, cy) = domain.coords(node);
    let mut pts = Vec::with_capacity(9);
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            let i = domain.resolve(cx as i64 + dx, cy as i64 + dy)?;
            pts.push((dx as f64, dy as f64, grid[i]));
        }
    }
    let basis: [fn(f64, f64) -> f64; 6] = [
        |_, _| 1.0,
        |x, _| x,
        |_, y| y,
        |x, _| x * x - 2.0 / 3.0,
        |_, y| y * y - 2.0 / 3.0,
        |x, y| x * y,
    ];
    let coef: Vec<f64> = basis
        .iter()
        .map(|b| {
            let num: f64 = pts.iter().map(|&(x, y, f)| f * b(x, y)).sum();
            let den: f64 = pts.iter().map(|&(x, y, _)| b(x, y) * b(x, y)).sum();
            num / den
        })
        .collect();
    let fit = |x: f64, y: f64| basis.iter().zip(&coef).map(|(b, c)| c * b(x, y)).sum::<f64>();
    let rms = (pts.iter().map(|&(x, y, f)| (f - fit(x, y)).powi(2)).sum::<f64>() / 9.0).sqrt();
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.2), hi.max(p.2)));
    let range = (hi - lo).max(f64::MIN_POSITIVE);
    // Hessian diagonal is 2 d and 2 e; mean eigenvalue is d + e
    Some((coef[3] + coef[4], rms / range))
}

pub fn lyapunov_value(s: &TraceSample, k_p: f64, m: f64) -> f64 {
    0.5 * k_p * s.e.norm_sq() + 0.5 * m * s.e_dot.norm_sq()
}

/// Judges a trace. Samples before `transient` seconds are ignored for the
/// monotonicity test.
pub fn verify_lyapunov(
    trace: &[TraceSample],
    k_p: f64,
    m: f64,
    transient: f64,
    fit_residual: f64,
) -> LyapunovReport {
    let v: Vec<f64> = trace.iter().map(|s| lyapunov_value(s, k_p, m)).collect();
    let mut max_increase = 0.0f64;
    let (mut err2, mut ref2) = (0.0, 0.0);
    for i in 1..trace.len() {
        let dt = trace[i].t - trace[i - 1].t;
        if trace[i].t > transient {
            max_increase = max_increase.max(v[i] - v[i - 1]);
        }
        let rate = (v[i] - v[i - 1]) / dt;
        let want = -trace[i].gamma * trace[i].e_dot.norm_sq();
        err2 += (rate - want).powi(2);
        ref2 += want * want;
    }
    // relative to the expected rate, floored so a conservative trace compares
    // against the monotonicity tolerance instead of zero
    let n = trace.len().saturating_sub(1).max(1) as f64;
    let rate_rms = (err2 / n).sqrt() / (ref2 / n).sqrt().max(MONOTONE_TOL);
    let status = if fit_residual > 1e-3 || !(k_p > 0.0) {
        LyapunovStatus::Inconclusive
    } else if max_increase > MONOTONE_TOL {
        LyapunovStatus::Growth
    } else if rate_rms > RATE_TOL {
        LyapunovStatus::RateMismatch
    } else {
        LyapunovStatus::Monotone
    };
    LyapunovReport {
        status,
        k_p,
        v_initial: v.first().copied().unwrap_or(0.0),
        v_final: v.last().copied().unwrap_or(0.0),
        max_increase,
        rate_rms,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractorCase {
    pub stiffness: f64,
    /// Damping broadcast by the governor, possibly negative.
    pub gamma_governor: f64,
    /// Look-ahead of the dual channel; zero disables it.
    pub lookahead: f64,
    pub offset: Vec2,
    pub dt: f64,
    pub steps: u64,
}

impl Default for AttractorCase {
    fn default() -> Self {
        Self {
            stiffness: 1.0,
            gamma_governor: 0.0,
            lookahead: 1.0,
            offset: Vec2::new(3.0, -2.0),
            dt: 0.01,
            steps: 4000,
        }
    }
}

/// Runs one agent into the minimum of `stiffness/2 |x - c|^2` sampled on a
/// lattice. The drag it sees is the governor damping plus the dual channel's
/// `lookahead * K_p`; negative totals act as no drag.
pub fn attractor_case(case: &AttractorCase) -> LyapunovReport {
    let side = 33;
    let domain = LatticeDomain::new(side, side, false).expect("non-empty");
    let c = domain.index(side / 2, side / 2);
    let centre = domain.cell_center(c);
    let phi = Grid::from_fn(&domain, |x, y| {
        0.5 * case.stiffness * (Vec2::new(x as f64, y as f64) - centre).norm_sq()
    });
    let (k_p, residual) = fit_curvature(&phi, &domain, c).expect("interior node");
    let force = ForceField::electrostatic(phi, &domain);
    let gamma = (case.gamma_governor + case.lookahead * k_p).max(0.0);
    let params = DynamicsParams {
        gamma,
        temperature: 0.0,
        dt: case.dt,
        lookahead: case.lookahead,
        ..DynamicsParams::default()
    };
    let mut a = AgentState::new(0, &AgentSpec::default(), &params, centre + case.offset);
    let mut rng = stream_rng(0, 0, 0);
    let sample = |a: &AgentState, t: f64| TraceSample {
        t,
        e: a.pos - centre,
        e_dot: a.vel,
        gamma,
    };
    let mut trace = vec![sample(&a, 0.0)];
    for n in 1..=case.steps {
        a = step_langevin(&a, &force, &params, &mut rng).expect("finite flight");
        trace.push(sample(&a, n as f64 * case.dt));
    }
    verify_lyapunov(&trace, k_p, a.mass, 0.1 * case.steps as f64 * case.dt, residual)
}

/// Seated agents near attractors under governor dampings from subsidy to
/// tax, all with the dual channel on.
pub fn verify_attractors(gammas: &[f64], stiffness: &[f64]) -> (Vec<LyapunovReport>, Verdict) {
    let mut reports = Vec::new();
    for &g in gammas {
        for &k in stiffness {
            reports.push(attractor_case(&AttractorCase {
                stiffness: k,
                gamma_governor: g,
                ..Default::default()
            }));
        }
    }
    let ok = reports.iter().all(|r| r.status == LyapunovStatus::Monotone);
    let worst_inc = reports.iter().map(|r| r.max_increase).fold(0.0, f64::max);
    let worst_rate = reports.iter().map(|r| r.rate_rms).fold(0.0, f64::max);
    let detail = format!(
        "{} cases, max V increase {worst_inc:.2e}, worst rate RMS {worst_rate:.3}",
        reports.len()
    );
    (reports, Verdict::new("lyapunov_descent", ok, detail))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form 1D trace along x.
    fn synthetic(f: impl Fn(f64) -> (f64, f64), gamma: f64, dt: f64, n: usize) -> Vec<TraceSample> {
        (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                let (e, v) = f(t);
                TraceSample {
                    t,
                    e: Vec2::new(e, 0.0),
                    e_dot: Vec2::new(v, 0.0),
                    gamma,
                }
            })
            .collect()
    }

    #[test]
    fn critically_damped_descends() {
        // m = k = 1, gamma = 2: e = (1 + t) e^-t
        let tr = synthetic(|t| ((1.0 + t) * (-t).exp(), -t * (-t).exp()), 2.0, 1e-3, 8000);
        let r = verify_lyapunov(&tr, 1.0, 1.0, 0.0, 0.0);
        assert_eq!(r.status, LyapunovStatus::Monotone, "{r:?}");
        assert!(r.rate_rms < 0.01);
    }

    #[test]
    fn undamped_oscillator_conserves() {
        let tr = synthetic(|t| (t.cos(), -t.sin()), 0.0, 1e-2, 2000);
        let r = verify_lyapunov(&tr, 1.0, 1.0, 0.0, 0.0);
        assert_eq!(r.status, LyapunovStatus::Monotone, "{r:?}");
        assert!((r.v_final - 0.5).abs() < 1e-12);
    }

    #[test]
    fn negative_damping_is_flagged() {
        // gamma = -0.2, m = k = 1: growing spiral
        let w = (1.0f64 - 0.01).sqrt();
        let tr = synthetic(
            |t| {
                let a = (0.1 * t).exp();
                (a * (w * t).cos(), a * (0.1 * (w * t).cos() - w * (w * t).sin()))
            },
            -0.2,
            1e-2,
            2000,
        );
        let r = verify_lyapunov(&tr, 1.0, 1.0, 0.0, 0.0);
        assert_eq!(r.status, LyapunovStatus::Growth);
    }

    #[test]
    fn bad_fit_is_inconclusive() {
        let tr = synthetic(|t| ((-t).exp(), -(-t).exp()), 1.0, 1e-2, 100);
        assert_eq!(verify_lyapunov(&tr, 1.0, 1.0, 0.0, 0.5).status, LyapunovStatus::Inconclusive);
    }

    #[test]
    fn curvature_fit_recovers_stiffness() {
        let d = LatticeDomain::new(9, 9, false).unwrap();
        let g = Grid::from_fn(&d, |x, y| {
            let (x, y) = (x as f64 - 4.0, y as f64 - 4.0);
            1.5 * (x * x + y * y) + 0.3 * x
        });
        let (k, res) = fit_curvature(&g, &d, d.index(4, 4)).unwrap();
        assert!((k - 3.0).abs() < 1e-12);
        assert!(res < 1e-12);
        assert!(fit_curvature(&g, &d, d.index(0, 4)).is_none());
    }

    #[test]
    fn simulated_agents_descend_with_dual_channel() {
        let (_, v) = verify_attractors(&[-0.3, 0.0, 0.5], &[0.5, 2.0]);
        assert!(v.passed, "{}", v.detail);
    }

    #[test]
    fn subsidy_without_dual_channel_oscillates() {
        let r = attractor_case(&AttractorCase {
            gamma_governor: -0.3,
            lookahead: 0.0,
            ..Default::default()
        });
        assert_ne!(r.status, LyapunovStatus::Monotone);
    }
}
