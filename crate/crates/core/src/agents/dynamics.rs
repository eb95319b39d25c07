use rand::Rng;
use rand_distr::StandardNormal;

use super::{AgentError, AgentState, DynamicsParams, Phase};
use crate::dualfield::{bilinear, FieldState, GradientField, Grid, LatticeDomain, Vec2};

/// Immutable per-tick force snapshot shared by all flying agents: the
/// gradient of the look-ahead potential and the magnetic field.
#[derive(Debug, Clone)]
pub struct ForceField {
    domain: LatticeDomain,
    potential: Grid<f64>,
    gradient: GradientField,
    b_z: Grid<f64>,
}

impl ForceField {
    pub fn from_state(field: &FieldState, domain: &LatticeDomain, lookahead: f64) -> Self {
        Self::new(field.predicted(lookahead), field.b_z.clone(), domain)
    }

    pub fn new(potential: Grid<f64>, b_z: Grid<f64>, domain: &LatticeDomain) -> Self {
        debug_assert!(potential.matches(domain) && b_z.matches(domain));
        Self {
            domain: *domain,
            gradient: GradientField::new(&potential, domain),
            potential,
            b_z,
        }
    }

    /// Potential only, no magnetic field.
    pub fn electrostatic(potential: Grid<f64>, domain: &LatticeDomain) -> Self {
        let b = Grid::filled(domain, 0.0);
        Self::new(potential, b, domain)
    }

    pub fn domain(&self) -> &LatticeDomain {
        &self.domain
    }

    pub fn gradient(&self, pos: Vec2) -> Vec2 {
        self.gradient.sample(pos)
    }

    pub fn potential(&self, pos: Vec2) -> f64 {
        let p = self.domain.wrap_position(pos);
        bilinear(&self.domain, self.potential.values(), p)
    }

    pub fn b_z(&self, pos: Vec2) -> f64 {
        let p = self.domain.wrap_position(pos);
        bilinear(&self.domain, self.b_z.values(), p)
    }
}

/// One semi-implicit step of `m dv = (-grad phi + q v x B - gamma v) dt + xi`.
///
/// Drift and noise kick the velocity, drag is applied implicitly
/// (`v / (1 + gamma dt / m)`, stable for any mass), the Lorentz term is an
/// exact rotation by `-q b_z dt / m`, then the position advances with the new
/// velocity.
pub fn step_langevin<R: Rng + ?Sized>(
    agent: &AgentState,
    field: &ForceField,
    params: &DynamicsParams,
    rng: &mut R,
) -> Result<AgentState, AgentError> {
    if agent.phase != Phase::Flight {
        return Err(AgentError::NotInFlight(agent.id));
    }
    let m = agent.mass;
    let dt = params.dt;
    let gamma = params.gamma.max(0.0);
    let mut v = agent.vel + field.gradient(agent.pos) * (-dt / m);
    if params.temperature > 0.0 && gamma > 0.0 {
        let sigma = (2.0 * gamma * params.temperature * dt).sqrt() / m;
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        v += Vec2::new(nx, ny) * sigma;
    }
    v = v * (1.0 / (1.0 + gamma * dt / m));
    let b = field.b_z(agent.pos);
    if agent.charge != 0.0 && b != 0.0 {
        v = v.rotate(-agent.charge * b * dt / m);
    }
    let pos = field.domain().wrap_position(agent.pos + v * dt);
    if !pos.is_finite() || !v.is_finite() {
        return Err(AgentError::NonFinite {
            id: agent.id,
            pos,
            vel: v,
        });
    }
    let mut next = agent.clone();
    next.pos = pos;
    next.vel = v;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentSpec;
    use crate::rng::stream_rng;

    fn agent_at(pos: Vec2, vel: Vec2, mass: f64, charge: f64) -> AgentState {
        let mut a = AgentState::new(0, &AgentSpec::default(), &DynamicsParams::default(), pos);
        a.vel = vel;
        a.mass = mass;
        a.charge = charge;
        a
    }

    fn flat(d: &LatticeDomain, b: f64) -> ForceField {
        ForceField::new(Grid::filled(d, 0.0), Grid::filled(d, b), d)
    }

    #[test]
    fn free_damping_tracks_exponential_decay() {
        let d = LatticeDomain::new(64, 64, true).unwrap();
        let f = flat(&d, 0.0);
        let p = DynamicsParams {
            gamma: 0.5,
            temperature: 0.0,
            dt: 0.01,
            ..DynamicsParams::default()
        };
        let mut a = agent_at(Vec2::new(10.0, 10.0), Vec2::new(1.0, 0.0), 1.0, 0.0);
        let mut rng = stream_rng(0, 0, 0);
        for n in 1..=500 {
            a = step_langevin(&a, &f, &p, &mut rng).unwrap();
            let t = n as f64 * p.dt;
            let exact = (-0.5 * t).exp();
            assert!((a.vel.norm() - exact).abs() / exact < 0.01, "t={t}");
        }
    }

    #[test]
    fn lorentz_rotation_does_no_work() {
        let d = LatticeDomain::new(32, 32, true).unwrap();
        let f = flat(&d, 2.0);
        let p = DynamicsParams {
            gamma: 0.0,
            temperature: 0.0,
            ..DynamicsParams::default()
        };
        let mut a = agent_at(Vec2::new(5.0, 5.0), Vec2::new(0.6, 0.8), 1.5, 1.3);
        let mut rng = stream_rng(0, 0, 0);
        let ke0 = a.kinetic_energy();
        for _ in 0..100 {
            a = step_langevin(&a, &f, &p, &mut rng).unwrap();
        }
        assert!((a.vel.norm() - 1.0).abs() < 1e-3);
        assert!((a.kinetic_energy() - ke0).abs() < 1e-12);
    }

    #[test]
    fn positive_charge_turns_clockwise_in_positive_field() {
        let d = LatticeDomain::new(32, 32, true).unwrap();
        let f = flat(&d, 1.0);
        let p = DynamicsParams {
            gamma: 0.0,
            ..DynamicsParams::default()
        };
        let a = agent_at(Vec2::new(5.0, 5.0), Vec2::new(1.0, 0.0), 1.0, 1.0);
        let b = step_langevin(&a, &f, &p, &mut stream_rng(0, 0, 0)).unwrap();
        // v x z for v = +x is -y
        assert!(b.vel.y < 0.0);
    }

    #[test]
    fn bowl_converges_to_minimum() {
        let d = LatticeDomain::new(16, 16, false).unwrap();
        let c = Vec2::new(7.0, 8.0);
        let phi = Grid::from_fn(&d, |x, y| {
            let dx = x as f64 - c.x;
            let dy = y as f64 - c.y;
            0.5 * (dx * dx + dy * dy)
        });
        let f = ForceField::electrostatic(phi, &d);
        let p = DynamicsParams {
            gamma: 2.0,
            temperature: 0.0,
            ..DynamicsParams::default()
        };
        let mut a = agent_at(Vec2::new(2.0, 13.0), Vec2::ZERO, 1.0, 0.0);
        let mut rng = stream_rng(0, 0, 0);
        for _ in 0..5000 {
            a = step_langevin(&a, &f, &p, &mut rng).unwrap();
        }
        assert!(f.gradient(a.pos).norm() < 1e-4, "{:?}", a.pos);
        assert!(d.distance_sq(a.pos, c).sqrt() < 1e-4);
    }

    #[test]
    fn fluctuation_dissipation() {
        let d = LatticeDomain::new(64, 64, true).unwrap();
        let f = flat(&d, 0.0);
        let (t, m) = (0.5, 2.0);
        let p = DynamicsParams {
            gamma: 4.0,
            temperature: t,
            dt: 0.01,
            ..DynamicsParams::default()
        };
        let mut a = agent_at(Vec2::new(1.0, 1.0), Vec2::ZERO, m, 0.0);
        let mut rng = stream_rng(42, 0, 0);
        let mut acc = 0.0;
        let (burn, n) = (5_000, 200_000);
        for i in 0..burn + n {
            a = step_langevin(&a, &f, &p, &mut rng).unwrap();
            if i >= burn {
                acc += a.vel.norm_sq();
            }
        }
        let mean = acc / n as f64;
        let target = 2.0 * t / m;
        assert!((mean - target).abs() / target < 0.05, "{mean} vs {target}");
    }

    #[test]
    fn rejects_seated_agents_and_non_finite_state() {
        let d = LatticeDomain::new(8, 8, true).unwrap();
        let f = flat(&d, 0.0);
        let mut a = agent_at(Vec2::new(1.0, 1.0), Vec2::ZERO, 1.0, 0.0);
        a.phase = Phase::Seated;
        assert!(matches!(
            step_langevin(&a, &f, &DynamicsParams::default(), &mut stream_rng(0, 0, 0)),
            Err(AgentError::NotInFlight(0))
        ));
        a.phase = Phase::Flight;
        a.vel = Vec2::new(f64::NAN, 0.0);
        assert!(matches!(
            step_langevin(&a, &f, &DynamicsParams::default(), &mut stream_rng(0, 0, 0)),
            Err(AgentError::NonFinite { .. })
        ));
    }

    #[test]
    fn trajectories_are_bit_identical_per_seed() {
        let d = LatticeDomain::new(16, 16, true).unwrap();
        let phi = Grid::from_fn(&d, |x, y| ((x * 3 + y * 5) % 7) as f64);
        let f = ForceField::new(phi, Grid::filled(&d, 0.3), &d);
        let p = DynamicsParams {
            temperature: 0.2,
            ..DynamicsParams::default()
        };
        let run = || {
            let mut a = agent_at(Vec2::new(3.3, 4.4), Vec2::ZERO, 1.0, 1.0);
            for tick in 0..200 {
                a = step_langevin(&a, &f, &p, &mut stream_rng(9, a.id, tick)).unwrap();
            }
            (a.pos.x.to_bits(), a.pos.y.to_bits(), a.vel.x.to_bits())
        };
        assert_eq!(run(), run());
    }
}
