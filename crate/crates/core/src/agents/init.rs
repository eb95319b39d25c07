use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AgentId, AgentSpec, AgentState, DynamicsParams};
use crate::dualfield::{LatticeDomain, Vec2};
use crate::rng::derive_seed;

const INIT_STREAM: u64 = 0x1417;

/// Maximum-entropy initialization: i.i.d. uniform positions over the domain,
/// zero velocity, in flight, wallet equal to the endowment. Ids are assigned
/// from `first_id` upward in spec order.
pub fn init_agents(
    specs: &[AgentSpec],
    first_id: AgentId,
    domain: &LatticeDomain,
    params: &DynamicsParams,
    seed: u64,
) -> Vec<AgentState> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[INIT_STREAM, first_id]));
    let e = domain.extent();
    specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let pos = Vec2::new(uniform(&mut rng, e.x, domain.wraps()), uniform(&mut rng, e.y, domain.wraps()));
            AgentState::new(first_id + i as AgentId, spec, params, pos)
        })
        .collect()
}

fn uniform(rng: &mut ChaCha8Rng, hi: f64, half_open: bool) -> f64 {
    if hi <= 0.0 {
        return 0.0;
    }
    if half_open {
        rng.random_range(0.0..hi)
    } else {
        rng.random_range(0.0..=hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::Phase;

    #[test]
    fn empty_population() {
        let d = LatticeDomain::new(4, 4, true).unwrap();
        assert!(init_agents(&[], 0, &d, &DynamicsParams::default(), 1).is_empty());
    }

    #[test]
    fn quadrant_counts_are_binomial() {
        let d = LatticeDomain::new(100, 100, true).unwrap();
        let n = 10_000;
        let specs = vec![AgentSpec::default(); n];
        let agents = init_agents(&specs, 0, &d, &DynamicsParams::default(), 99);
        let mut q = [0usize; 4];
        for a in &agents {
            assert!(d.contains(a.pos));
            assert_eq!(a.vel, Vec2::ZERO);
            assert_eq!(a.phase, Phase::Flight);
            assert_eq!(a.wallet, specs[0].e_init);
            let idx = (a.pos.x >= 50.0) as usize + 2 * (a.pos.y >= 50.0) as usize;
            q[idx] += 1;
        }
        let mean = n as f64 / 4.0;
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for c in q {
            assert!((c as f64 - mean).abs() < 4.0 * sigma, "{q:?}");
        }
        // chi-square with 3 dof, p = 0.001 critical value 16.27
        let chi: f64 = q.iter().map(|&c| (c as f64 - mean).powi(2) / mean).sum();
        assert!(chi < 16.27, "chi2 = {chi}");
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let d = LatticeDomain::new(16, 16, false).unwrap();
        let specs = vec![AgentSpec::default(); 50];
        let a = init_agents(&specs, 0, &d, &DynamicsParams::default(), 5);
        let b = init_agents(&specs, 0, &d, &DynamicsParams::default(), 5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.pos.x.to_bits(), y.pos.x.to_bits());
            assert_eq!(x.pos.y.to_bits(), y.pos.y.to_bits());
        }
        let c = init_agents(&specs, 0, &d, &DynamicsParams::default(), 6);
        assert_ne!(a[0].pos, c[0].pos);
    }
}
