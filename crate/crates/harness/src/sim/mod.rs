//! The full tick pipeline: agents fly and probe, zones clear, nodes lease,
//! the field is re-projected and the governor decides once per epoch.

mod market;
mod workload;

use rand::seq::index::sample;
use rayon::prelude::*;
use teg_core::agents::{
    init_agents, jit_expand_decision, probe_wealth, step_langevin, AgentId, AgentSpec, AgentState,
    DynamicsParams, ForceField, JitDecision, Phase,
};
use teg_core::dualfield::{project_field, FieldState, GprParams, Grid};
use teg_core::governor::{Governor, MacroTelemetry};
use teg_core::ledger::{HeatMap, Order, Outcome, TokenBank, TokenSupply, Tokens, ZoneLedger, ZoneParams};
use teg_core::nodesim::{
    compressed_size, run_airlock, select_weak, CgroupMode, ExpandOutcome, NodeEvent, NodeState,
};
use teg_core::rng::{derive_seed, stream_rng};
use teg_core::{LatticeDomain, Vec2};

pub use market::{node_reserve, MarketAction, NodeMarket, SeatInfo, ZoneMap, SATURATED_RESERVE};
pub use workload::{generate_workload, usage, Job};

use crate::config::ScenarioConfig;
use crate::events::{AgentEventKind, Event, EventBody, SeatedRow};
use crate::metrics::{MetricsBuilder, RunMetrics};
use crate::HarnessError;

const FIELD_STREAM: u64 = 0x4649_454C << 24;

#[derive(Debug, Clone)]
struct Walker {
    state: AgentState,
    job: Job,
    age: u64,
    node: Option<usize>,
    /// Per-unit price paid for the seat.
    paid: Tokens,
    last_probe: Option<u64>,
    pending_bid: Option<(usize, Tokens)>,
    /// Friction dissipated since the last take-off.
    work: f64,
    broke_epochs: u64,
}

struct Seats<'a>(&'a [Walker]);

impl SeatInfo for Seats<'_> {
    fn mass(&self, agent: AgentId) -> f64 {
        self.0[agent as usize].state.mass
    }
    fn paid(&self, agent: AgentId) -> Tokens {
        self.0[agent as usize].paid
    }
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub events: Vec<Event>,
    pub metrics: RunMetrics,
    pub supply: TokenSupply,
    pub jobs: usize,
}

pub struct Simulation {
    cfg: ScenarioConfig,
    seed: u64,
    domain: LatticeDomain,
    map: ZoneMap,
    zones: Vec<ZoneLedger>,
    nodes: Vec<NodeState>,
    bank: TokenBank,
    walkers: Vec<Walker>,
    pending_jobs: std::collections::VecDeque<Job>,
    heat: HeatMap,
    field: FieldState,
    force: ForceField,
    governor: Governor,
    pool: rayon::ThreadPool,
    events: Vec<Event>,
    builder: MetricsBuilder,
    epoch: u64,
    tick: u64,
    last_burned: Tokens,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let seed = cfg.seed()?;
        let domain = cfg.lattice()?;
        let side = cfg.zone_side();
        let map = ZoneMap {
            width: domain.width(),
            per_side: cfg.zones.per_side,
            side,
        };
        let zp = ZoneParams {
            side,
            ring_capacity: cfg.zones.ring_capacity,
            c_txn: cfg.ledger.c_txn,
            mu_friction: cfg.ledger.mu_friction,
        };
        let zones = (0..map.zones())
            .map(|z| ZoneLedger::new(z, zp))
            .collect::<Result<Vec<_>, _>>()
            .map_err(core_err)?;
        let nodes = (0..domain.len())
            .map(|i| NodeState::new(i, cfg.node.c_total))
            .collect::<Result<Vec<_>, _>>()
            .map_err(core_err)?;
        let field = FieldState::static_potential(&domain, Grid::filled(&domain, 0.0));
        let force = ForceField::from_state(&field, &domain, cfg.dynamics.lookahead);
        let governor = Governor::new(cfg.governor, domain.diameter()).map_err(core_err)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.threads)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(Self {
            cfg: cfg.clone(),
            seed,
            domain,
            map,
            zones,
            nodes,
            bank: TokenBank::new(),
            walkers: Vec::new(),
            pending_jobs: generate_workload(cfg, seed).into(),
            heat: HeatMap::new(domain.len(), cfg.field.heat_lambda),
            field,
            force,
            governor,
            pool,
            events: Vec::new(),
            builder: MetricsBuilder::new(cfg.metrics),
            epoch: 0,
            tick: 0,
            last_burned: 0,
        })
    }

    fn emit(&mut self, body: EventBody) {
        let e = Event {
            epoch: self.epoch,
            tick: self.tick,
            body,
        };
        self.builder.push(&e);
        self.events.push(e);
    }

    fn agent_event(&mut self, id: AgentId, event: AgentEventKind) {
        let w = &self.walkers[id as usize];
        let body = EventBody::Agent {
            agent: id,
            phase: w.state.phase,
            x: w.state.pos.x,
            y: w.state.pos.y,
            wallet: self.bank.balance(id),
            footprint: w.state.footprint,
            event,
        };
        self.emit(body);
    }

    fn node_events(&mut self, evs: Vec<NodeEvent>) {
        for ev in evs {
            self.emit(EventBody::Node {
                node: ev.node,
                event: ev.kind,
                agent: ev.agent,
                bytes: ev.amount,
            });
        }
    }

    pub fn run(mut self) -> Result<RunOutput, HarnessError> {
        let jobs = self.pending_jobs.len();
        for _ in 0..self.cfg.run.epochs {
            self.arrivals()?;
            for _ in 0..self.cfg.run.ticks_per_epoch {
                self.step_tick()?;
                self.tick += 1;
            }
            self.tick -= 1;
            self.end_epoch()?;
            self.tick += 1;
            self.epoch += 1;
        }
        Ok(RunOutput {
            supply: self.bank.supply(),
            metrics: self.builder.finish(),
            events: self.events,
            jobs,
        })
    }

    fn arrivals(&mut self) -> Result<(), HarnessError> {
        let mut batch = Vec::new();
        while self.pending_jobs.front().is_some_and(|j| j.arrive_epoch <= self.epoch) {
            batch.push(self.pending_jobs.pop_front().expect("front checked"));
        }
        if batch.is_empty() {
            return Ok(());
        }
        let specs: Vec<AgentSpec> = batch.iter().map(|j| j.spec.clone()).collect();
        let first = batch[0].id;
        let states = init_agents(&specs, first, &self.domain, &self.cfg.dynamics, self.seed);
        for (job, state) in batch.into_iter().zip(states) {
            debug_assert_eq!(job.id as usize, self.walkers.len());
            self.bank.open(job.id, job.spec.e_init).map_err(core_err)?;
            self.walkers.push(Walker {
                state,
                job,
                age: 0,
                node: None,
                paid: 0,
                last_probe: None,
                pending_bid: None,
                work: 0.0,
                broke_epochs: 0,
            });
            let id = self.walkers.len() as AgentId - 1;
            self.agent_event(id, AgentEventKind::Arrive);
        }
        Ok(())
    }

    fn flight_params(&self) -> DynamicsParams {
        DynamicsParams {
            gamma: self.cfg.dynamics.gamma + self.governor.gamma(),
            ..self.cfg.dynamics
        }
    }

    fn step_tick(&mut self) -> Result<(), HarnessError> {
        let params = self.flight_params();
        let gamma = params.gamma.max(0.0);
        let (seed, tick, force) = (self.seed, self.tick, &self.force);
        let stepped: Vec<Option<Result<AgentState, _>>> = self.pool.install(|| {
            self.walkers
                .par_iter()
                .map(|w| {
                    (w.state.phase == Phase::Flight).then(|| {
                        let mut rng = stream_rng(seed, w.state.id, tick);
                        step_langevin(&w.state, force, &params, &mut rng)
                    })
                })
                .collect()
        });

        let mut tel = MacroTelemetry::default();
        let mut flying = 0usize;
        for (w, s) in self.walkers.iter_mut().zip(stepped) {
            let Some(s) = s else { continue };
            let s = s.map_err(|e| HarnessError::Fault {
                tick,
                dump: format!("{e}; agent {:?}", w.state),
            })?;
            let v2 = s.vel.norm_sq();
            if self.domain.nearest_cell(s.pos) != self.domain.nearest_cell(w.state.pos) {
                tel.migration_rate += 1.0;
            }
            w.work += gamma * v2 * params.dt;
            tel.mean_speed += v2.sqrt();
            tel.dissipation += gamma * v2;
            flying += 1;
            w.state = s;
        }
        if flying > 0 {
            tel.mean_speed /= flying as f64;
            tel.migration_rate /= flying as f64;
        }
        tel.agent_density = flying as f64 / self.domain.len() as f64;

        let submitted = self.submit_orders()?;
        tel.bid_rate = submitted as f64;
        self.clear_zones()?;
        self.governor.observe(&tel).map_err(core_err)?;
        self.audit()
    }

    fn submit_orders(&mut self) -> Result<usize, HarnessError> {
        let lc = &self.cfg.ledger;
        let mut heat = Vec::new();
        let mut count = 0;
        for i in 0..self.walkers.len() {
            let w = &self.walkers[i];
            if w.state.phase != Phase::Flight {
                continue;
            }
            let id = w.state.id;
            let qty = w.job.usage(w.age);
            let order = if let Some((cell, limit)) = w.pending_bid {
                self.walkers[i].pending_bid = None;
                (cell, Order::bid(id, 0, qty, limit))
            } else {
                let due = w.last_probe.is_none_or(|t| self.tick >= t + lc.probe_interval);
                if !(due && w.state.vel.norm() < lc.settle_speed) {
                    continue;
                }
                let cell = self.domain.nearest_cell(w.state.pos);
                let mut st = w.state.clone();
                st.wallet = self.bank.balance(id);
                self.walkers[i].last_probe = Some(self.tick);
                (cell, probe_wealth(&st, 0, qty, lc.probe_fraction))
            };
            let (cell, mut o) = order;
            let (zone, local) = self.map.locate(cell);
            o.cell = Some(local);
            heat.push((cell, o.quantity as f64));
            match self.zones[zone].submit(o, &mut self.bank) {
                Ok(_) => count += 1,
                Err(e) => log::debug!("agent {id} order rejected: {e}"),
            }
        }
        self.heat.update(heat);
        Ok(count)
    }

    fn clear_zones(&mut self) -> Result<(), HarnessError> {
        let s_phys = self.field.s_phys.values().to_vec();
        for z in 0..self.zones.len() {
            let (outcomes, actions, node_events) = {
                let seats = Seats(&self.walkers);
                let mut market = NodeMarket {
                    zone: z,
                    map: self.map,
                    nodes: &mut self.nodes,
                    seats: &seats,
                    s_phys: &s_phys,
                    weights: self.cfg.field.weights,
                    k_mem: self.cfg.ledger.k_mem,
                    actions: vec![],
                    node_events: vec![],
                };
                let out = self.zones[z].clear(&mut self.bank, &mut market).map_err(core_err)?;
                (out, market.actions, market.node_events)
            };
            self.node_events(node_events);
            for a in actions {
                if let MarketAction::Evicted { agent, .. } = a {
                    let w = &mut self.walkers[agent as usize];
                    w.state.transition(Phase::Flight).map_err(core_err)?;
                    w.state.footprint = 0;
                    w.node = None;
                    w.paid = 0;
                    w.work = 0.0;
                    self.agent_event(agent, AgentEventKind::Evicted);
                }
            }
            for o in outcomes {
                self.apply_outcome(z, o)?;
            }
        }
        Ok(())
    }

    fn apply_outcome(&mut self, zone: usize, o: Outcome) -> Result<(), HarnessError> {
        match o {
            Outcome::Filled {
                agent,
                cell,
                quantity,
                price,
                second_price,
                burned,
                ..
            } => {
                let g = self.map.global(zone, cell);
                self.emit(EventBody::Settlement {
                    zone,
                    cell: g,
                    winner: agent,
                    quantity,
                    price,
                    second_price,
                    burned,
                    kind: "bid".into(),
                });
                let phi = self.field.phi_eff[g].real;
                let w = &mut self.walkers[agent as usize];
                w.state.transition(Phase::Seated).map_err(core_err)?;
                w.state.pos = self.domain.cell_center(g);
                w.state.vel = Vec2::ZERO;
                w.state.footprint = quantity;
                w.node = Some(g);
                w.paid = price;
                let work = std::mem::take(&mut w.work);
                self.agent_event(agent, AgentEventKind::Seat);
                self.emit(EventBody::Placed {
                    agent,
                    node: g,
                    phi,
                    work,
                });
            }
            Outcome::Probe {
                agent,
                cell,
                would_fill: true,
                ..
            } => {
                let w = &mut self.walkers[agent as usize];
                if w.state.phase == Phase::Flight {
                    let qty = w.job.usage(w.age).max(1);
                    let limit = ((self.cfg.ledger.probe_fraction * self.bank.balance(agent) as f64).floor() as Tokens) / qty;
                    w.pending_bid = Some((self.map.global(zone, cell), limit));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn audit(&mut self) -> Result<(), HarnessError> {
        self.bank.audit().map_err(core_err)?;
        let s = self.bank.supply();
        if s.burned < self.last_burned {
            return Err(HarnessError::Fault {
                tick: self.tick,
                dump: format!("burned fell from {} to {}", self.last_burned, s.burned),
            });
        }
        self.last_burned = s.burned;
        Ok(())
    }

    fn end_epoch(&mut self) -> Result<(), HarnessError> {
        for i in 0..self.walkers.len() {
            if self.walkers[i].node.is_some() {
                self.seated_epoch(i)?;
            }
        }
        self.bankruptcies()?;
        self.audit()?;
        self.project()?;
        let rec = self.governor.end_epoch().map_err(core_err)?;
        self.emit(EventBody::governor(&rec));
        let seated = self
            .walkers
            .iter()
            .filter(|w| w.node.is_some())
            .map(|w| SeatedRow {
                agent: w.state.id,
                leased: w.state.footprint,
                used: w.job.usage(w.age),
                plateau: w.age >= w.job.growth_epochs,
            })
            .collect();
        let body = EventBody::Epoch {
            allocated: self.nodes.iter().map(|n| n.allocated()).collect(),
            c_total: self.cfg.node.c_total,
            seated,
            supply: self.bank.supply(),
        };
        self.emit(body);
        Ok(())
    }

    /// Lease growth, progress, completion and holding tax for one seat.
    fn seated_epoch(&mut self, i: usize) -> Result<(), HarnessError> {
        let id = i as AgentId;
        let node = self.walkers[i].node.expect("seated");
        let jit = self.cfg.jit;
        // a throttle only lasts until the next decision
        self.nodes[node].unthrottle(id).map_err(core_err)?;
        let w = &self.walkers[i];
        let need = w.job.usage(w.age + jit.horizon.max(0.0).ceil() as u64);
        let limit = node_reserve(&self.nodes[node], self.cfg.ledger.k_mem);
        let mut state = w.state.clone();
        state.wallet = self.bank.balance(id);
        let phi = self.field.phi_eff[node];
        let decision = jit_expand_decision(&state, need, w.job.spec.consumption_rate, phi, limit, &jit)
            .map_err(core_err)?;
        if let JitDecision::Bid { quantity, limit } = decision {
            self.expand(i, node, quantity, limit)?;
        }

        let w = &mut self.walkers[i];
        if w.job.usage(w.age + 1) <= w.state.footprint {
            w.age += 1;
            if w.state.phase == Phase::Glassy {
                w.state.transition(Phase::Seated).map_err(core_err)?;
            }
        } else if w.state.phase != Phase::Glassy {
            w.state.transition(Phase::Glassy).map_err(core_err)?;
            self.agent_event(id, AgentEventKind::Glassy);
        }

        let w = &self.walkers[i];
        if w.age >= w.job.spec.lifetime {
            let (_, ev) = self.nodes[node].evict(id).map_err(core_err)?;
            self.node_events(vec![ev]);
            let w = &mut self.walkers[i];
            w.state.transition(Phase::Terminated).map_err(core_err)?;
            w.state.footprint = 0;
            w.node = None;
            self.agent_event(id, AgentEventKind::Complete);
            return Ok(());
        }
        let idle = w.state.footprint.saturating_sub(w.job.usage(w.age));
        let tax = (jit.holding_tax * idle as f64).ceil() as Tokens;
        if tax > 0 {
            self.bank.charge_saturating(id, tax).map_err(core_err)?;
        }
        Ok(())
    }

    fn expand(&mut self, i: usize, node: usize, quantity: u64, limit: Tokens) -> Result<(), HarnessError> {
        let id = i as AgentId;
        let (outcome, ev) = self.nodes[node].try_expand(id, quantity).map_err(core_err)?;
        self.node_events(vec![ev]);
        let granted = match outcome {
            ExpandOutcome::Granted => true,
            ExpandOutcome::GlassyTriggered => self.evacuate_for(i, node, quantity)?,
        };
        if granted {
            let cost = quantity.saturating_mul(limit) + self.cfg.jit.c_txn;
            self.bank.charge_saturating(id, cost).map_err(core_err)?;
            self.walkers[i].state.footprint += quantity;
        }
        Ok(())
    }

    /// Airlock a weaker co-tenant out so `strong` can grow. Returns whether
    /// the expansion was then granted.
    fn evacuate_for(&mut self, strong: usize, node: usize, quantity: u64) -> Result<bool, HarnessError> {
        let sid = strong as AgentId;
        let candidates: Vec<(AgentId, u64, Tokens)> = self.nodes[node]
            .residents()
            .iter()
            .filter(|r| r.agent != sid && r.mode == CgroupMode::Normal)
            .map(|r| (r.agent, r.footprint, self.bank.balance(r.agent)))
            .collect();
        let Some(weak) = select_weak(&candidates) else {
            return Ok(false);
        };
        let fp = self.nodes[node].resident(weak).map_or(0, |r| r.footprint);
        let ckpt = compressed_size(fp).min(self.nodes[node].buffer_reserved());
        let c_total = self.nodes[node].c_total();
        let report = run_airlock(&mut self.nodes[node], weak, sid, quantity, ckpt).map_err(core_err)?;
        self.node_events(report.events.clone());
        self.emit(EventBody::Airlock {
            node,
            weak,
            strong: sid,
            strong_suspended: report.strong_suspended,
            escape_ticks: report.escape_ticks,
            max_allocated: report.max_allocated,
            c_total,
        });
        let w = &mut self.walkers[weak as usize];
        w.state.transition(Phase::Flight).map_err(core_err)?;
        w.state.footprint = 0;
        w.node = None;
        w.paid = 0;
        w.work = 0.0;
        self.agent_event(weak, AgentEventKind::Evacuated);
        let (outcome, ev) = self.nodes[node].try_expand(sid, quantity).map_err(core_err)?;
        self.node_events(vec![ev]);
        Ok(outcome == ExpandOutcome::Granted)
    }

    fn bankruptcies(&mut self) -> Result<(), HarnessError> {
        let grace = self.cfg.population.bankrupt_grace;
        for i in 0..self.walkers.len() {
            let w = &self.walkers[i];
            if w.state.phase != Phase::Flight {
                continue;
            }
            let id = w.state.id;
            let qty = w.job.usage(w.age).max(1);
            let offer = (self.cfg.ledger.probe_fraction * self.bank.balance(id) as f64).floor() as Tokens / qty;
            let w = &mut self.walkers[i];
            if offer == 0 {
                w.broke_epochs += 1;
            } else {
                w.broke_epochs = 0;
            }
            if w.broke_epochs > grace {
                w.state.transition(Phase::Terminated).map_err(core_err)?;
                self.agent_event(id, AgentEventKind::Bankrupt);
            }
        }
        Ok(())
    }

    /// Re-projects the field from sampled node telemetry and the bid heat.
    fn project(&mut self) -> Result<(), HarnessError> {
        let fc = &self.cfg.field;
        let n = self.domain.len();
        let mut rng = stream_rng(self.seed, FIELD_STREAM, self.epoch);
        let k = fc.samples.min(n);
        let mut cells: Vec<usize> = sample(&mut rng, n, k).into_iter().collect();
        cells.sort_unstable();
        let samples: Vec<(usize, f64)> = cells
            .into_iter()
            .map(|c| {
                let u = self.nodes[c].allocated() as f64 / self.nodes[c].c_total() as f64;
                (c, fc.entropy_scale * u)
            })
            .collect();
        let prior = samples.iter().map(|s| s.1).sum::<f64>() / samples.len().max(1) as f64;
        let gpr = GprParams {
            prior_mean: prior,
            ..fc.gpr
        };
        let s_phys = project_field(&samples, &gpr, &self.domain).map_err(core_err)?;
        let h = Grid::from_vec(&self.domain, self.heat.values().to_vec()).map_err(core_err)?;
        let prev = self.field.phi_real();
        let field = FieldState::assemble(s_phys, h, Some((&prev, 1)), &fc.weights, self.epoch + 1).map_err(core_err)?;
        self.force = ForceField::from_state(&field, &self.domain, self.cfg.dynamics.lookahead);
        self.field = field;
        Ok(())
    }
}

fn core_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Core(e.to_string())
}

/// Runs a scenario end to end.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, HarnessError> {
    Simulation::new(cfg)?.run()
}

/// Derived seed for auxiliary experiments sharing a base seed.
pub fn sub_seed(seed: u64, tag: u64) -> u64 {
    derive_seed(seed, &[tag])
}
