use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroPhase {
    ColdStasis,
    HeatDeath,
    LaminarFlow,
}

impl MacroPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            MacroPhase::ColdStasis => "cold_stasis",
            MacroPhase::HeatDeath => "heat_death",
            MacroPhase::LaminarFlow => "laminar_flow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseThresholds {
    pub s_lo: f64,
    pub s_hi: f64,
    pub r_lo: f64,
    pub r_hi: f64,
}

impl Default for PhaseThresholds {
    fn default() -> Self {
        Self {
            s_lo: 1.0,
            s_hi: 10.0,
            r_lo: 1.0,
            r_hi: 10.0,
        }
    }
}

impl PhaseThresholds {
    pub fn is_valid(&self) -> bool {
        self.s_lo > 0.0 && self.s_lo < self.s_hi && self.r_lo < self.r_hi
    }
}

/// Regime from smoothed Reynolds and entropy production. Points outside the
/// three defined regions keep `previous`.
pub fn classify_phase(re: f64, sdot: f64, th: &PhaseThresholds, previous: MacroPhase) -> MacroPhase {
    if sdot < th.s_lo && re < th.r_lo {
        MacroPhase::ColdStasis
    } else if sdot < th.s_lo && re >= th.r_hi {
        MacroPhase::HeatDeath
    } else if sdot >= th.s_lo && re < th.r_hi {
        MacroPhase::LaminarFlow
    } else {
        previous
    }
}

/// Melting drive `-h0 * max(0, 1 - sdot / s_lo)` in cold stasis, else zero.
pub fn subsidy_drive(sdot: f64, phase: MacroPhase, s_lo: f64, h0: f64) -> f64 {
    if phase == MacroPhase::ColdStasis {
        -h0 * (1.0 - sdot / s_lo).max(0.0)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_examples() {
        let th = PhaseThresholds::default();
        let prev = MacroPhase::LaminarFlow;
        assert_eq!(classify_phase(0.0, 0.0, &th, prev), MacroPhase::ColdStasis);
        assert_eq!(classify_phase(2.0 * th.r_hi, 0.0, &th, prev), MacroPhase::HeatDeath);
        assert_eq!(classify_phase(5.0, 50.0, &th, MacroPhase::ColdStasis), MacroPhase::LaminarFlow);
        // ambiguous corners hold the previous phase
        assert_eq!(classify_phase(5.0, 0.5, &th, MacroPhase::HeatDeath), MacroPhase::HeatDeath);
        assert_eq!(classify_phase(50.0, 50.0, &th, MacroPhase::ColdStasis), MacroPhase::ColdStasis);
    }

    #[test]
    fn subsidy_examples() {
        assert_eq!(subsidy_drive(0.0, MacroPhase::LaminarFlow, 2.0, 3.0), 0.0);
        assert_eq!(subsidy_drive(0.0, MacroPhase::ColdStasis, 2.0, 3.0), -3.0);
        assert_eq!(subsidy_drive(1.0, MacroPhase::ColdStasis, 2.0, 3.0), -1.5);
        assert_eq!(subsidy_drive(5.0, MacroPhase::ColdStasis, 2.0, 3.0), 0.0);
    }
}
