//! Reduced macro plant comparing Reynolds overshoot with and without the
//! dual-number look-ahead when the governor's damping reaches zones late.

use rand::Rng;
use serde::{Deserialize, Serialize};
use teg_core::governor::{
    reynolds_with_length, Governor, GovernorParams, HocbfParams, LandauParams, MacroTelemetry,
};
use teg_core::rng::stream_rng;

use super::Verdict;

const DAMPING_STREAM: u64 = 0x4441_4D50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingConfig {
    pub epochs: u64,
    pub ticks_per_epoch: u64,
    pub dt: f64,
    pub broadcast_delay: usize,
    pub lookahead: f64,
    /// Base friction of the swarm.
    pub friction: f64,
    /// Speed gained per unit of arrival pressure.
    pub drive_gain: f64,
    /// Decay rate of queued load per unit time.
    pub service_rate: f64,
    pub density: f64,
    pub length: f64,
    pub bursts: (u64, u64),
    pub burst_amplitude: (f64, f64),
}

impl Default for DampingConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            ticks_per_epoch: 20,
            dt: 0.05,
            broadcast_delay: 5,
            lookahead: 1.0,
            friction: 0.2,
            drive_gain: 1.0,
            service_rate: 0.5,
            density: 0.25,
            length: 16.0,
            bursts: (2, 4),
            burst_amplitude: (2.0, 6.0),
        }
    }
}

fn governor_params(delay: usize) -> GovernorParams {
    GovernorParams {
        landau: LandauParams {
            a: 1.0,
            b: 1.0,
            re_c: 5.0,
            h_field: 0.0,
            gamma_bounds: (-0.5, 5.0),
        },
        hocbf: HocbfParams {
            re_max: 1e6,
            gamma_max: 5.0,
            ..HocbfParams::default()
        },
        half_life: 5.0,
        broadcast_delay: delay,
        ..GovernorParams::default()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DampingRun {
    pub peak_re: f64,
    pub final_re: f64,
    /// `peak_re - final_re`.
    pub overshoot: f64,
}

/// Swarm speed driven by burst arrivals. Damping is the delayed governor
/// value plus, when `dual` is set, `lookahead * max(0, dPhi/dt)` with `Phi`
/// the queued load the zones see without delay.
pub fn damping_run(cfg: &DampingConfig, seed: u64, dual: bool) -> DampingRun {
    let mut rng = stream_rng(seed, DAMPING_STREAM, 0);
    let n_bursts = rng.random_range(cfg.bursts.0..=cfg.bursts.1);
    let mut schedule: Vec<(u64, u64, f64)> = (0..n_bursts)
        .map(|_| {
            let start = rng.random_range(2..cfg.epochs * 2 / 3);
            let len = rng.random_range(1..=4);
            (start, start + len, rng.random_range(cfg.burst_amplitude.0..=cfg.burst_amplitude.1))
        })
        .collect();
    schedule.sort_by_key(|b| b.0);
    let mut gov = Governor::new(governor_params(cfg.broadcast_delay), cfg.length).expect("valid governor");
    let (mut speed, mut load) = (0.0f64, 0.0f64);
    let mut prev_phi = load;
    let mut phi_dot = 0.0f64;
    let mut out = DampingRun::default();
    for epoch in 0..cfg.epochs {
        let pressure = 0.2
            + schedule
                .iter()
                .filter(|b| (b.0..b.1).contains(&epoch))
                .map(|b| b.2)
                .sum::<f64>();
        for _ in 0..cfg.ticks_per_epoch {
            let g_gov = gov.gamma();
            let g_dual = if dual { cfg.lookahead * phi_dot.max(0.0) } else { 0.0 };
            let drag = (cfg.friction + g_gov + g_dual).max(0.0);
            speed = (speed + cfg.dt * cfg.drive_gain * pressure) / (1.0 + cfg.dt * drag);
            load += cfg.dt * (pressure - cfg.service_rate * load);
            let t = MacroTelemetry {
                mean_speed: speed,
                agent_density: cfg.density,
                dissipation: drag * speed * speed,
                migration_rate: 0.0,
                bid_rate: 0.0,
            };
            gov.observe(&t).expect("finite telemetry");
            let re = reynolds_with_length(&t, cfg.length, g_gov, gov.params().nu0);
            out.peak_re = out.peak_re.max(re);
            out.final_re = re;
        }
        gov.end_epoch().expect("observed epoch");
        // the dual channel differences the field once per epoch
        phi_dot = load - prev_phi;
        prev_phi = load;
    }
    out.overshoot = out.peak_re - out.final_re;
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingPair {
    pub seed: u64,
    pub with_dual: DampingRun,
    pub without_dual: DampingRun,
}

pub fn verify_damping(cfg: &DampingConfig, seeds: u64) -> (Vec<DampingPair>, Verdict) {
    let pairs: Vec<DampingPair> = (0..seeds)
        .map(|s| DampingPair {
            seed: s,
            with_dual: damping_run(cfg, s, true),
            without_dual: damping_run(cfg, s, false),
        })
        .collect();
    let wins = pairs
        .iter()
        .filter(|p| p.without_dual.overshoot > p.with_dual.overshoot)
        .count();
    let shown: Vec<String> = pairs
        .iter()
        .map(|p| format!("{:.2}/{:.2}", p.without_dual.overshoot, p.with_dual.overshoot))
        .collect();
    let detail = format!(
        "delay {} epochs, dual-off overshoot larger in {wins}/{seeds} seeds, off/on [{}]",
        cfg.broadcast_delay,
        shown.join(" ")
    );
    (pairs, Verdict::new("dual_damping", wins as u64 == seeds, detail))
}
