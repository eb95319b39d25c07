use serde::{Deserialize, Serialize};

use crate::dualfield::LatticeDomain;

/// Default baseline viscosity in the Reynolds denominator.
pub const NU0: f64 = 0.5;

/// Aggregate motion and market activity over one micro-batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MacroTelemetry {
    pub mean_speed: f64,
    pub agent_density: f64,
    /// Sum of `gamma |v|^2` per epoch over flying agents.
    pub dissipation: f64,
    pub migration_rate: f64,
    pub bid_rate: f64,
}

impl MacroTelemetry {
    pub fn is_valid(&self) -> bool {
        [
            self.mean_speed,
            self.agent_density,
            self.dissipation,
            self.migration_rate,
            self.bid_rate,
        ]
        .iter()
        .all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// `speed * density * L / (|gamma| + nu0)` with `L` the lattice diameter.
pub fn reynolds(t: &MacroTelemetry, domain: &LatticeDomain, gamma: f64, nu0: f64) -> f64 {
    reynolds_with_length(t, domain.diameter(), gamma, nu0)
}

pub fn reynolds_with_length(t: &MacroTelemetry, length: f64, gamma: f64, nu0: f64) -> f64 {
    t.mean_speed * t.agent_density * length / (gamma.abs() + nu0)
}

/// Frictional heat plus market churn: `dissipation + c_txn * bid_rate`.
pub fn entropy_production(t: &MacroTelemetry, c_txn: f64) -> f64 {
    t.dissipation + c_txn * t.bid_rate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reynolds_examples() {
        let d = LatticeDomain::new(100, 40, true).unwrap();
        let rest = MacroTelemetry {
            agent_density: 0.5,
            ..Default::default()
        };
        assert_eq!(reynolds(&rest, &d, 0.5, NU0), 0.0);
        let t = MacroTelemetry {
            mean_speed: 2.0,
            agent_density: 0.5,
            ..Default::default()
        };
        assert!((reynolds(&t, &d, 0.5, 0.5) - 100.0).abs() < 1e-12);
        let t2 = MacroTelemetry {
            mean_speed: 4.0,
            ..t
        };
        assert!((reynolds(&t2, &d, 0.5, 0.5) - 200.0).abs() < 1e-12);
        // negative damping still thickens the denominator by its magnitude
        assert_eq!(reynolds(&t, &d, -0.5, 0.5), reynolds(&t, &d, 0.5, 0.5));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy_production(&MacroTelemetry::default(), 1.0), 0.0);
        // one agent, gamma 1, speed 2
        let drag = MacroTelemetry {
            dissipation: 1.0 * 2.0 * 2.0,
            ..Default::default()
        };
        assert_eq!(entropy_production(&drag, 3.0), 4.0);
        let a = MacroTelemetry {
            dissipation: 1.5,
            bid_rate: 2.0,
            ..Default::default()
        };
        let b = MacroTelemetry {
            dissipation: 0.5,
            bid_rate: 7.0,
            ..Default::default()
        };
        let ab = MacroTelemetry {
            dissipation: 2.0,
            bid_rate: 9.0,
            ..Default::default()
        };
        assert!(
            (entropy_production(&a, 0.3) + entropy_production(&b, 0.3) - entropy_production(&ab, 0.3)).abs()
                < 1e-12
        );
    }
}
