use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{
    barrier, classify_phase, entropy_production, hocbf_filter, landau_gamma,
    reynolds_with_length, subsidy_drive, GovernorError, HocbfParams, LandauParams, MacroPhase,
    MacroTelemetry, PhaseThresholds, NU0,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GovernorParams {
    pub landau: LandauParams,
    pub hocbf: HocbfParams,
    pub thresholds: PhaseThresholds,
    /// Full-strength subsidy drive.
    pub h0: f64,
    pub nu0: f64,
    pub c_txn: f64,
    /// EMA half-life in micro-batches.
    pub half_life: f64,
    pub filter_enabled: bool,
    /// Epochs between computing a damping value and zones seeing it.
    pub broadcast_delay: usize,
}

impl Default for GovernorParams {
    fn default() -> Self {
        Self {
            landau: LandauParams::default(),
            hocbf: HocbfParams::default(),
            thresholds: PhaseThresholds::default(),
            h0: 0.5,
            nu0: NU0,
            c_txn: 1.0,
            half_life: 10.0,
            filter_enabled: true,
            broadcast_delay: 0,
        }
    }
}

impl GovernorParams {
    pub fn validate(&self) -> Result<(), GovernorError> {
        let ok = self.landau.is_valid()
            && self.hocbf.is_valid()
            && self.thresholds.is_valid()
            && self.nu0 > 0.0
            && self.half_life > 0.0
            && self.h0 >= 0.0
            && self.c_txn >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(GovernorError::InvalidParameter(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GovernorState {
    /// Damping currently broadcast to the zones.
    pub gamma: f64,
    pub re: f64,
    pub sdot: f64,
    pub phase: MacroPhase,
    pub epoch: u64,
}

/// One epoch-boundary decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GovernorRecord {
    pub epoch: u64,
    pub re: f64,
    pub re_dot: f64,
    pub sdot: f64,
    pub phase: MacroPhase,
    pub h_barrier: f64,
    pub gamma_desired: f64,
    pub gamma_safe: f64,
    pub h_field: f64,
    /// Value in force for the next epoch.
    pub gamma_broadcast: f64,
}

/// Multi-rate controller: smooths every micro-batch, decides once per epoch.
#[derive(Debug, Clone)]
pub struct Governor {
    params: GovernorParams,
    length: f64,
    state: GovernorState,
    seeded: bool,
    batches: u64,
    prev_epoch_re: Option<f64>,
    queue: VecDeque<f64>,
}

impl Governor {
    /// `length` is the lattice diameter used by the Reynolds analog.
    pub fn new(params: GovernorParams, length: f64) -> Result<Self, GovernorError> {
        params.validate()?;
        Ok(Self {
            params,
            length,
            state: GovernorState {
                gamma: 0.0,
                re: 0.0,
                sdot: 0.0,
                phase: MacroPhase::LaminarFlow,
                epoch: 0,
            },
            seeded: false,
            batches: 0,
            prev_epoch_re: None,
            queue: VecDeque::from(vec![0.0; params.broadcast_delay]),
        })
    }

    pub fn params(&self) -> &GovernorParams {
        &self.params
    }

    pub fn state(&self) -> &GovernorState {
        &self.state
    }

    /// Damping seen by the zones; constant within an epoch.
    pub fn gamma(&self) -> f64 {
        self.state.gamma
    }

    fn ema_weight(&self) -> f64 {
        1.0 - 0.5f64.powf(1.0 / self.params.half_life)
    }

    /// Folds one micro-batch into the smoothed Reynolds and entropy rate.
    pub fn observe(&mut self, t: &MacroTelemetry) -> Result<(), GovernorError> {
        if !t.is_valid() {
            return Err(GovernorError::InvalidTelemetry(*t));
        }
        let re = reynolds_with_length(t, self.length, self.state.gamma, self.params.nu0);
        let sdot = entropy_production(t, self.params.c_txn);
        if self.seeded {
            let k = self.ema_weight();
            self.state.re += k * (re - self.state.re);
            self.state.sdot += k * (sdot - self.state.sdot);
        } else {
            self.state.re = re;
            self.state.sdot = sdot;
            self.seeded = true;
        }
        self.batches += 1;
        Ok(())
    }

    /// Epoch boundary: phase, drive, Landau target, barrier filter, broadcast.
    pub fn end_epoch(&mut self) -> Result<GovernorRecord, GovernorError> {
        if self.batches == 0 {
            return Err(GovernorError::EmptyEpoch);
        }
        self.batches = 0;
        let p = &self.params;
        let s = self.state;
        let phase = classify_phase(s.re, s.sdot, &p.thresholds, s.phase);
        let h_field = subsidy_drive(s.sdot, phase, p.thresholds.s_lo, p.h0);
        let landau = LandauParams { h_field, ..p.landau };
        let gamma_desired = landau_gamma(s.re, &landau);
        let re_dot = self.prev_epoch_re.map_or(0.0, |r| s.re - r);
        let h_barrier = barrier(s.re, re_dot, &p.hocbf);
        let gamma_safe = if p.filter_enabled {
            landau.clamp(hocbf_filter(gamma_desired, s.re, re_dot, &p.hocbf, 1.0))
        } else {
            gamma_desired
        };
        self.queue.push_back(gamma_safe);
        let broadcast = self.queue.pop_front().unwrap_or(gamma_safe);
        self.prev_epoch_re = Some(s.re);
        self.state.phase = phase;
        self.state.gamma = broadcast;
        let rec = GovernorRecord {
            epoch: s.epoch,
            re: s.re,
            re_dot,
            sdot: s.sdot,
            phase,
            h_barrier,
            gamma_desired,
            gamma_safe,
            h_field,
            gamma_broadcast: broadcast,
        };
        self.state.epoch += 1;
        Ok(rec)
    }

    /// Observes every batch of an epoch, then decides.
    pub fn tick(&mut self, batches: &[MacroTelemetry]) -> Result<GovernorRecord, GovernorError> {
        if batches.is_empty() {
            return Err(GovernorError::EmptyEpoch);
        }
        for b in batches {
            self.observe(b)?;
        }
        self.end_epoch()
    }
}

/// Functional form of one governor epoch.
pub fn governor_tick(
    governor: &Governor,
    batches: &[MacroTelemetry],
) -> Result<(Governor, GovernorRecord), GovernorError> {
    let mut g = governor.clone();
    let rec = g.tick(batches)?;
    Ok((g, rec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> Vec<MacroTelemetry> {
        vec![MacroTelemetry::default(); 100]
    }

    #[test]
    fn idle_cluster_gets_subsidy() {
        let g = Governor::new(GovernorParams::default(), 16.0).unwrap();
        let (g, rec) = governor_tick(&g, &quiet()).unwrap();
        assert_eq!(rec.phase, MacroPhase::ColdStasis);
        assert!(rec.gamma_safe < 0.0);
        assert_eq!(g.gamma(), rec.gamma_safe);
    }

    #[test]
    fn overheating_taxes_within_one_epoch() {
        let mut params = GovernorParams::default();
        params.hocbf.re_max = 1e6;
        let mut g = Governor::new(params, 16.0).unwrap();
        let hot = vec![
            MacroTelemetry {
                mean_speed: 5.0,
                agent_density: 1.0,
                dissipation: 50.0,
                ..Default::default()
            };
            100
        ];
        // Re = 5 * 16 / 0.5 = 160 >> Re_c = 10
        let rec = g.tick(&hot).unwrap();
        assert!(rec.re > 100.0);
        assert!(rec.gamma_safe > 0.0);
        let expect = landau_gamma(rec.re, &params.landau);
        assert!((rec.gamma_desired - expect).abs() < 1e-12);
    }

    #[test]
    fn gamma_respects_bounds_and_delay() {
        let mut params = GovernorParams::default();
        params.broadcast_delay = 2;
        params.hocbf.re_max = 50.0;
        let mut g = Governor::new(params, 16.0).unwrap();
        let hot = vec![
            MacroTelemetry {
                mean_speed: 3.0,
                agent_density: 1.0,
                dissipation: 5.0,
                ..Default::default()
            };
            10
        ];
        let mut recs = vec![];
        for _ in 0..6 {
            let r = g.tick(&hot).unwrap();
            let (lo, hi) = params.landau.gamma_bounds;
            assert!(r.gamma_safe >= lo && r.gamma_safe <= hi);
            recs.push(r);
        }
        assert_eq!(recs[0].gamma_broadcast, 0.0);
        assert_eq!(recs[1].gamma_broadcast, 0.0);
        assert_eq!(recs[2].gamma_broadcast, recs[0].gamma_safe);
    }

    #[test]
    fn empty_batches_rejected() {
        let mut g = Governor::new(GovernorParams::default(), 16.0).unwrap();
        assert_eq!(g.tick(&[]).unwrap_err(), GovernorError::EmptyEpoch);
        assert_eq!(g.end_epoch().unwrap_err(), GovernorError::EmptyEpoch);
    }

    #[test]
    fn gamma_constant_between_epochs() {
        let mut g = Governor::new(GovernorParams::default(), 16.0).unwrap();
        g.tick(&quiet()).unwrap();
        let before = g.gamma();
        for _ in 0..50 {
            g.observe(&MacroTelemetry {
                mean_speed: 9.0,
                agent_density: 1.0,
                ..Default::default()
            })
            .unwrap();
            assert_eq!(g.gamma(), before);
        }
    }
}
