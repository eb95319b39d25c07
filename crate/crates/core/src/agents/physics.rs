use super::{AgentSpec, DynamicsParams};

/// Floor applied when the mass formula degenerates.
pub const MIN_MASS: f64 = 1e-3;

/// Inertial mass `alpha_m * mem_size + beta_m * ln(e_init)`.
///
/// Mass is fixed by the contract at creation, not by current solvency.
pub fn agent_mass(spec: &AgentSpec, params: &DynamicsParams) -> f64 {
    let e = (spec.e_init as f64).max(f64::MIN_POSITIVE);
    let m = params.alpha_m * spec.mem_size as f64 + params.beta_m * e.ln();
    if m > MIN_MASS && m.is_finite() {
        m
    } else {
        log::warn!(
            "mass {m} for mem={} e_init={} clamped to {MIN_MASS}",
            spec.mem_size,
            spec.e_init
        );
        MIN_MASS
    }
}

/// Latency-criticality charge `sla_prio * (1 + risk_factor)`.
pub fn agent_charge(spec: &AgentSpec) -> f64 {
    spec.sla_prio.max(0.0) * (1.0 + spec.risk_factor.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(mem: u64, e: u64) -> AgentSpec {
        AgentSpec {
            mem_size: mem,
            e_init: e,
            ..AgentSpec::default()
        }
    }

    fn params(a: f64, b: f64) -> DynamicsParams {
        DynamicsParams {
            alpha_m: a,
            beta_m: b,
            ..DynamicsParams::default()
        }
    }

    #[test]
    fn mass_examples() {
        assert_eq!(agent_mass(&spec(8, 10), &params(1.0, 0.0)), 8.0);
        // e_init is integral; ln(e) itself is checked through the formula
        let m = agent_mass(&spec(0, 1000), &params(0.0, 1.0));
        assert!((m - 1000f64.ln()).abs() < 1e-12);
        let m = agent_mass(&spec(4, 100), &params(0.5, 2.0));
        assert!((m - (2.0 + 2.0 * 100f64.ln())).abs() < 1e-12);
        assert!((m - 11.21).abs() < 5e-3);
    }

    #[test]
    fn degenerate_mass_is_clamped() {
        assert_eq!(agent_mass(&spec(0, 1), &params(1.0, 1.0)), MIN_MASS);
        assert_eq!(agent_mass(&spec(0, 0), &params(1.0, 1.0)), MIN_MASS);
    }

    #[test]
    fn charge_examples() {
        let mut s = AgentSpec::default();
        s.sla_prio = 0.0;
        assert_eq!(agent_charge(&s), 0.0);
        s.sla_prio = 1.0;
        s.risk_factor = 0.0;
        assert_eq!(agent_charge(&s), 1.0);
        s.sla_prio = 2.0;
        s.risk_factor = 0.5;
        assert_eq!(agent_charge(&s), 3.0);
    }

    proptest! {
        #[test]
        fn heavier_contracts_weigh_more(mem in 0u64..1000, e in 2u64..1_000_000, dm in 1u64..100, de in 1u64..1000) {
            let p = params(0.3, 0.7);
            let base = agent_mass(&spec(mem, e), &p);
            prop_assert!(agent_mass(&spec(mem + dm, e), &p) > base || base == MIN_MASS);
            prop_assert!(agent_mass(&spec(mem, e + de), &p) > base || base == MIN_MASS);
        }
    }
}
