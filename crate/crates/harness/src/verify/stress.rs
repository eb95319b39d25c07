//! Burst-arrival stress of the macro plant under the barrier filter, and the
//! Landau sweep against its closed form.

use rand::Rng;
use serde::{Deserialize, Serialize};
use teg_core::governor::{
    barrier, hocbf_filter, landau_gamma, plant_step_driven, HocbfParams, LandauParams,
};
use teg_core::rng::stream_rng;

use super::Verdict;

const STRESS_STREAM: u64 = 0x5354_5253;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressConfig {
    pub seeds: u64,
    pub steps: u64,
    pub dt: f64,
    pub hocbf: HocbfParams,
    pub landau: LandauParams,
    /// Chance per step that a burst starts.
    pub burst_prob: f64,
    pub burst_len: (u64, u64),
}

impl Default for StressConfig {
    fn default() -> Self {
        Self {
            seeds: 1000,
            steps: 400,
            dt: 0.25,
            hocbf: HocbfParams {
                re_max: 50.0,
                gamma_max: 10.0,
                alpha_cbf: 1.0,
                m_eff: 1.0,
                drive_bound: 10.0,
            },
            landau: LandauParams {
                a: 0.05,
                b: 1.0,
                re_c: 10.0,
                h_field: 0.0,
                gamma_bounds: (-1.0, 10.0),
            },
            burst_prob: 0.05,
            burst_len: (5, 40),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StressTrace {
    pub max_re: f64,
    pub min_h: f64,
}

/// One seed: Re starts at rest, random bursts push with up to the drive
/// bound, the controller asks for the Landau damping.
pub fn stress_run(cfg: &StressConfig, seed: u64, filter: bool) -> StressTrace {
    let mut rng = stream_rng(seed, STRESS_STREAM, 0);
    let p = &cfg.hocbf;
    let (mut re, mut v) = (0.0f64, 0.0f64);
    let mut out = StressTrace {
        max_re: 0.0,
        min_h: barrier(re, v, p),
    };
    let mut burst = 0u64;
    for _ in 0..cfg.steps {
        if burst == 0 && rng.random::<f64>() < cfg.burst_prob {
            burst = rng.random_range(cfg.burst_len.0..=cfg.burst_len.1);
        }
        let drive = if burst > 0 {
            burst -= 1;
            p.drive_bound * rng.random_range(0.5..=1.0)
        } else {
            p.drive_bound * rng.random_range(0.0..0.1)
        };
        let desired = landau_gamma(re, &cfg.landau);
        let gamma = if filter {
            cfg.landau.clamp(hocbf_filter(desired, re, v, p, cfg.dt))
        } else {
            desired
        };
        let (r1, v1, peak) = plant_step_driven(re, v, gamma, drive, p, cfg.dt);
        // Re is a non-negative ratio
        (re, v) = if r1 < 0.0 { (0.0, 0.0) } else { (r1, v1) };
        out.max_re = out.max_re.max(peak);
        out.min_h = out.min_h.min(barrier(re, v, p));
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StressReport {
    pub seeds: u64,
    pub max_re_on: f64,
    pub min_h_on: f64,
    pub violations_on: u64,
    pub max_re_off: f64,
    pub violations_off: u64,
}

pub fn stress_report(cfg: &StressConfig) -> StressReport {
    let mut r = StressReport {
        seeds: cfg.seeds,
        min_h_on: f64::INFINITY,
        ..Default::default()
    };
    for s in 0..cfg.seeds {
        let on = stress_run(cfg, s, true);
        r.max_re_on = r.max_re_on.max(on.max_re);
        r.min_h_on = r.min_h_on.min(on.min_h);
        if on.max_re > cfg.hocbf.re_max || on.min_h < 0.0 {
            r.violations_on += 1;
        }
        let off = stress_run(cfg, s, false);
        r.max_re_off = r.max_re_off.max(off.max_re);
        if off.max_re > cfg.hocbf.re_max {
            r.violations_off += 1;
        }
    }
    r
}

pub fn verify_stress(cfg: &StressConfig) -> (StressReport, Verdict) {
    let r = stress_report(cfg);
    let ok = r.violations_on == 0 && r.violations_off > 0;
    let detail = format!(
        "{} seeds, filter on: max Re {:.3} <= {}, min h {:.4}; filter off: max Re {:.1}, {} seeds over",
        r.seeds, r.max_re_on, cfg.hocbf.re_max, r.min_h_on, r.max_re_off, r.violations_off
    );
    (r, Verdict::new("barrier_safety", ok, detail))
}

/// Closed form with no external field: `0` below `Re_c`, else
/// `sqrt(a (Re - Re_c) / b)`.
pub fn landau_closed_form(re: f64, p: &LandauParams) -> f64 {
    if re <= p.re_c {
        0.0
    } else {
        (p.a * (re - p.re_c) / p.b).sqrt()
    }
}

/// Largest deviation of the solver from the closed form over `n` evenly
/// spaced Reynolds numbers in `[0, re_hi]`.
pub fn landau_sweep(p: &LandauParams, re_hi: f64, n: usize) -> (f64, Vec<(f64, f64, f64)>) {
    let p = LandauParams { h_field: 0.0, ..*p };
    let mut worst = 0.0f64;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let re = re_hi * i as f64 / (n - 1).max(1) as f64;
        let got = landau_gamma(re, &p);
        let want = landau_closed_form(re, &p);
        worst = worst.max((got - want).abs());
        rows.push((re, got, want));
    }
    (worst, rows)
}

pub fn verify_landau(p: &LandauParams, re_hi: f64, n: usize) -> Verdict {
    let (worst, _) = landau_sweep(p, re_hi, n);
    Verdict::new(
        "landau_pitchfork",
        worst <= 1e-9,
        format!("{n} Re values in [0, {re_hi}], max |error| {worst:.3e}"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let p = LandauParams {
            a: 2.0,
            b: 0.5,
            re_c: 10.0,
            h_field: 0.0,
            gamma_bounds: (-1.0, 100.0),
        };
        assert_eq!(landau_closed_form(3.0, &p), 0.0);
        assert!((landau_closed_form(12.0, &p) - 8f64.sqrt()).abs() < 1e-15);
        assert!(verify_landau(&p, 40.0, 100).passed);
    }

    #[test]
    fn filter_is_load_bearing_on_a_few_seeds() {
        let cfg = StressConfig {
            seeds: 20,
            ..Default::default()
        };
        let (r, v) = verify_stress(&cfg);
        assert!(v.passed, "{}", v.detail);
        assert!(r.max_re_on <= cfg.hocbf.re_max);
    }
}
