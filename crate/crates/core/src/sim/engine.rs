use super::world::{stream_rng, Stream, World};
use super::{action_to_rat, StateEncoder, STATE_DIM, ACTION_COUNT};
use crate::baselines::{HeuristicPolicy, TabularAgent};
use crate::config::{Algorithm, ExperimentConfig, QosConfig, SimulationConfig};
use crate::metrics::KpiRow;
use crate::net::{Packet, Rat};
use crate::qos::{reward_for, KpiSample};
use crate::rl::{argmax, DqnAgent, Divergence, Experience};
use crate::traffic::{TrafficClass, TrafficClassSpec, TrafficError};
use std::collections::VecDeque;

/// A steering policy driven by the simulator.
#[derive(Debug, Clone)]
pub enum Agent {
    Dqn(DqnAgent),
    QLearning(TabularAgent),
    Heuristic(HeuristicPolicy),
}

impl Agent {
    /// Fresh agent for `alg` seeded from the run seed's agent stream.
    pub fn new(alg: Algorithm, cfg: &ExperimentConfig, seed: u64) -> Self {
        let rng = stream_rng(seed, Stream::Agent);
        match alg {
            Algorithm::Dqn => Agent::Dqn(DqnAgent::new(STATE_DIM, ACTION_COUNT, cfg.agent.clone(), rng)),
            Algorithm::Qlearning => Agent::QLearning(TabularAgent::new(cfg.tabular, rng)),
            Algorithm::Heuristic => Agent::Heuristic(HeuristicPolicy::new(cfg.heuristic)),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Agent::Dqn(_) => Algorithm::Dqn,
            Agent::QLearning(_) => Algorithm::Qlearning,
            Agent::Heuristic(_) => Algorithm::Heuristic,
        }
    }

    /// Replay memory size, zero for agents without one.
    pub fn replay_len(&self) -> usize {
        match self {
            Agent::Dqn(a) => a.memory().len(),
            _ => 0,
        }
    }
}

/// Whether the agent explores and learns during the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    /// Greedy actions, no learning.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRecord {
    pub tti: u64,
    pub flow: usize,
    pub action: usize,
    /// The action equals the policy's greedy choice.
    pub greedy: bool,
    pub state: super::SteeringState,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct FlowCounters {
    generated: u64,
    delivered_packets: u64,
    delivered_bits: u64,
    delay_sum: f64,
    queued: u64,
}

#[derive(Debug, Clone)]
struct Pending {
    flow: usize,
    start: u64,
    encoded: [f64; STATE_DIM],
    key: usize,
    action: usize,
    snapshot: FlowCounters,
}

#[derive(Debug, Clone, Default)]
struct ReportAccumulator {
    ttis: u64,
    bits: u64,
    packets: u64,
    delay_sum: f64,
    class_delay: [f64; TrafficClass::COUNT],
    class_packets: [u64; TrafficClass::COUNT],
    bytes: [[u64; 2]; TrafficClass::COUNT],
    reward_sum: f64,
    rewards: u64,
    drops: u64,
    capacity_violations: u64,
    latency_violations: u64,
}

/// Labels stamped on every KPI row of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunLabel {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub load_bps: f64,
}

/// Result of a complete run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<KpiRow>,
    pub agent: Agent,
    pub world: World,
    pub decisions: Vec<DecisionRecord>,
}

/// The TTI loop: decisions, scheduling, transmission, rewards and training.
#[derive(Debug, Clone)]
pub struct Simulation {
    world: World,
    agent: Agent,
    mode: Mode,
    specs: Vec<TrafficClassSpec>,
    qos: QosConfig,
    sim: SimulationConfig,
    encoder: StateEncoder,
    label: RunLabel,
    tti: u64,
    /// Per flow, per RAT.
    flows: Vec<[FlowCounters; 2]>,
    pending: VecDeque<Pending>,
    report: ReportAccumulator,
    window: u64,
    rows: Vec<KpiRow>,
    extra: Vec<Packet>,
    log: Option<Vec<DecisionRecord>>,
}

impl Simulation {
    /// World and fresh agent for one cell of a sweep.
    pub fn new(cfg: &ExperimentConfig, algorithm: Algorithm, load_bps: f64, seed: u64) -> Result<Self, TrafficError> {
        let world = World::build(&cfg.topology, &cfg.traffic, &cfg.simulation, load_bps, seed)?;
        let agent = Agent::new(algorithm, cfg, seed);
        let label = RunLabel { algorithm, seed, load_bps };
        Ok(Self::from_parts(world, agent, Mode::Train, cfg, label))
    }

    pub fn from_parts(world: World, agent: Agent, mode: Mode, cfg: &ExperimentConfig, label: RunLabel) -> Self {
        let mut specs = cfg.traffic.clone();
        specs.sort_by_key(|s| s.class.index());
        let n = world.flows.len();
        Self {
            world,
            agent,
            mode,
            specs,
            qos: cfg.qos.clone(),
            sim: cfg.simulation,
            encoder: StateEncoder::new(cfg.simulation.queue_capacity),
            label,
            tti: 0,
            flows: vec![[FlowCounters::default(); 2]; n],
            pending: VecDeque::new(),
            report: ReportAccumulator::default(),
            window: 0,
            rows: Vec::new(),
            extra: Vec::new(),
            log: None,
        }
    }

    /// Keeps a record of every steering decision.
    pub fn with_decision_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn agent(&self) -> &Agent {
        &self.agent
    }

    pub fn tti(&self) -> u64 {
        self.tti
    }

    pub fn rows(&self) -> &[KpiRow] {
        &self.rows
    }

    pub fn decisions(&self) -> &[DecisionRecord] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    /// Adds `count` packets of `flow` to the next TTI's arrivals.
    pub fn push_arrivals(&mut self, flow: usize, count: usize) {
        let f = &self.world.flows[flow];
        let p = Packet {
            flow,
            class: f.class,
            size_bits: f.packet_bits,
            enqueue_tti: 0,
        };
        self.extra.extend(std::iter::repeat_n(p, count));
    }

    fn spec(&self, class: TrafficClass) -> &TrafficClassSpec {
        self.specs
            .iter()
            .find(|s| s.class == class)
            .expect("every flow class has a spec")
    }

    fn decide(&mut self, flow: usize) {
        let state = self.world.build_state(flow);
        let encoded = self.encoder.encode(&state);
        let explore = self.mode == Mode::Train;
        let (action, key, greedy) = match &mut self.agent {
            Agent::Dqn(a) => {
                let action = a.act(&encoded, explore);
                let greedy = self.log.is_some() && action == argmax(&a.q_values(&encoded));
                (action, 0, greedy)
            }
            Agent::QLearning(a) => {
                let key = a.key(&state);
                let action = a.act_on_key(key, explore);
                (action, key, action == argmax(&a.table().get(key)))
            }
            Agent::Heuristic(h) => (h.decide(&state).index(), 0, true),
        };
        self.world.apply_action(flow, action_to_rat(action));
        if let Some(log) = &mut self.log {
            log.push(DecisionRecord {
                tti: self.tti,
                flow,
                action,
                greedy,
                state,
            });
        }
        self.pending.push_back(Pending {
            flow,
            start: self.tti,
            encoded,
            key,
            action,
            snapshot: self.flows[flow][action],
        });
    }

    /// Runs one TTI.
    pub fn step(&mut self) -> Result<(), Divergence> {
        let tti = self.tti;
        self.world.advance_channel();
        let mut arrivals = self.world.generate(tti);
        arrivals.extend(self.extra.drain(..).map(|p| Packet { enqueue_tti: tti, ..p }));

        let boundary = tti % self.sim.decision_period == 0;
        for f in 0..self.world.flows.len() {
            if self.world.is_active(f) && (boundary || self.world.route(f).is_none()) {
                self.decide(f);
            }
        }

        for p in arrivals {
            let rat = self.world.route(p.flow).expect("decided flows are routed");
            let c = &mut self.flows[p.flow][rat.index()];
            c.generated += 1;
            if self.world.enqueue(p) {
                c.queued += 1;
            } else {
                self.report.drops += 1;
            }
        }

        let outcome = self.world.transmit(tti);
        self.report.capacity_violations += outcome.capacity_violations;
        for d in &outcome.deliveries {
            let p = d.packet;
            let c = &mut self.flows[p.flow][d.rat.index()];
            c.delivered_packets += 1;
            c.delivered_bits += p.size_bits as u64;
            c.delay_sum += d.delay;
            c.queued -= 1;
            let late = d.delay > self.spec(p.class).delay_qos_s;
            let r = &mut self.report;
            let ci = p.class.index();
            r.bits += p.size_bits as u64;
            r.packets += 1;
            r.delay_sum += d.delay;
            r.class_delay[ci] += d.delay;
            r.class_packets[ci] += 1;
            r.bytes[ci][d.rat.index()] += p.size_bits as u64 / 8;
            if late {
                r.latency_violations += 1;
            }
        }

        self.close_reward_windows()?;
        if self.mode == Mode::Train {
            if let Agent::Dqn(a) = &mut self.agent {
                a.learn()?;
            }
        }

        self.report.ttis += 1;
        self.tti += 1;
        if self.tti % self.sim.report_window == 0 {
            self.flush_report();
        }
        Ok(())
    }

    fn close_reward_windows(&mut self) -> Result<(), Divergence> {
        let w = self.sim.reward_window;
        while self.pending.front().is_some_and(|p| p.start + w - 1 <= self.tti) {
            let p = self.pending.pop_front().expect("front exists");
            // Only traffic at the chosen RAT is credited to the decision.
            let now = self.flows[p.flow][p.action];
            let generated = now.generated - p.snapshot.generated;
            let packets = now.delivered_packets - p.snapshot.delivered_packets;
            if generated == 0 && packets == 0 && now.queued == 0 {
                // Nothing happened on this flow; the window says nothing about the action.
                continue;
            }
            let tti_s = self.world.tti_duration();
            let delay = if packets > 0 {
                (now.delay_sum - p.snapshot.delay_sum) / packets as f64
            } else {
                // Backlogged but starved: the head-of-line age is a lower bound.
                self.world
                    .oldest_queued(p.flow, action_to_rat(p.action))
                    .map_or(0.0, |t| (self.tti + 1 - t) as f64 * tti_s)
            };
            let class = self.world.flows[p.flow].class;
            let sample = KpiSample {
                class,
                bs: self.world.serving_bs(self.world.flows[p.flow].ue, action_to_rat(p.action)),
                delay,
                throughput: (now.delivered_bits - p.snapshot.delivered_bits) as f64 / (w as f64 * tti_s),
                window: w,
            };
            let r = reward_for(&sample, self.spec(class), &self.qos.weights_for(class), self.qos.ratio_cap);
            self.report.reward_sum += r;
            self.report.rewards += 1;
            if self.mode == Mode::Frozen {
                continue;
            }
            match &mut self.agent {
                Agent::Dqn(a) => {
                    let next = self.encoder.encode(&self.world.build_state(p.flow));
                    a.remember(Experience {
                        state: p.encoded.to_vec(),
                        action: p.action,
                        reward: r,
                        next_state: next.to_vec(),
                        terminal: false,
                    });
                }
                Agent::QLearning(a) => {
                    let next = a.key(&self.world.build_state(p.flow));
                    a.learn(p.key, p.action, r, next);
                }
                Agent::Heuristic(_) => {}
            }
        }
        Ok(())
    }

    fn flush_report(&mut self) {
        let r = std::mem::take(&mut self.report);
        if r.ttis == 0 {
            return;
        }
        let mean = |sum: f64, n: u64| if n == 0 { 0.0 } else { sum / n as f64 };
        let row = KpiRow {
            throughput_bps: r.bits as f64 / (r.ttis as f64 * self.world.tti_duration()),
            mean_delay_s: mean(r.delay_sum, r.packets),
            class_delay_s: std::array::from_fn(|c| mean(r.class_delay[c], r.class_packets[c])),
            bytes: r.bytes,
            mean_reward: mean(r.reward_sum, r.rewards),
            drops: r.drops,
            capacity_violations: r.capacity_violations,
            latency_violations: r.latency_violations,
            ..KpiRow::empty(self.label.algorithm, self.label.seed, self.label.load_bps, self.window)
        };
        self.rows.push(row);
        self.window += 1;
    }

    /// Steps `ttis` times.
    pub fn run_for(&mut self, ttis: u64) -> Result<(), Divergence> {
        for _ in 0..ttis {
            self.step()?;
        }
        Ok(())
    }

    /// Emits any partial reporting window and hands back the results.
    pub fn finish(mut self) -> RunOutput {
        self.flush_report();
        RunOutput {
            rows: self.rows,
            agent: self.agent,
            world: self.world,
            decisions: self.log.unwrap_or_default(),
        }
    }
}

/// Error from a complete run.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error("{source}")]
    Diverged {
        source: Divergence,
        /// Rows completed before the abort.
        rows: Vec<KpiRow>,
    },
}

/// Trains (or evaluates) one algorithm for the configured number of TTIs.
pub fn run(cfg: &ExperimentConfig, algorithm: Algorithm, load_bps: f64, seed: u64) -> Result<RunOutput, RunError> {
    let mut sim = Simulation::new(cfg, algorithm, load_bps, seed)?;
    match sim.run_for(cfg.simulation.ttis) {
        Ok(()) => Ok(sim.finish()),
        Err(source) => Err(RunError::Diverged { source, rows: sim.rows }),
    }
}

/// Serving RAT shares of delivered bytes per class across `rows`.
pub fn lte_byte_share(rows: &[KpiRow], class: TrafficClass) -> Option<f64> {
    let (lte, nr) = rows.iter().fold((0u64, 0u64), |(l, n), r| {
        (l + r.bytes[class.index()][Rat::Lte.index()], n + r.bytes[class.index()][Rat::Nr.index()])
    });
    (lte + nr > 0).then(|| lte as f64 / (lte + nr) as f64)
}
