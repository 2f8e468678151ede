use super::{Experience, QNetwork, ReplayMemory};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Linear decay from `start` to `end` over `decay_steps`, flat afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64) -> f64 {
        if self.decay_steps == 0 || step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.end) && (0.0..=1.0).contains(&self.start) && self.end <= self.start
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_steps: 5_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    pub learning_rate: f64,
    pub minibatch_size: usize,
    /// Gradient steps between target-network copies.
    pub target_sync_period: u64,
    pub replay_capacity: usize,
    /// Experiences collected before the first gradient step.
    pub warmup_steps: usize,
    pub hidden_layers: Vec<usize>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            epsilon: EpsilonSchedule::default(),
            learning_rate: 1e-3,
            minibatch_size: 32,
            target_sync_period: 200,
            replay_capacity: 10_000,
            warmup_steps: 500,
            hidden_layers: vec![32, 32],
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if !self.epsilon.is_valid() {
            return Err("epsilon schedule needs 0 <= end <= start <= 1".into());
        }
        if !(self.learning_rate > 0.0) {
            return Err("learning rate must be positive".into());
        }
        if self.minibatch_size == 0 || self.target_sync_period == 0 || self.replay_capacity == 0 {
            return Err("minibatch size, target sync period and replay capacity must be positive".into());
        }
        if self.minibatch_size > self.replay_capacity {
            return Err("minibatch size exceeds replay capacity".into());
        }
        if self.hidden_layers.iter().any(|&h| h == 0) {
            return Err("hidden layers must have at least one unit".into());
        }
        Ok(())
    }

    pub fn layer_sizes(&self, input_dim: usize, action_count: usize) -> Vec<usize> {
        std::iter::once(input_dim)
            .chain(self.hidden_layers.iter().copied())
            .chain(std::iter::once(action_count))
            .collect()
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("training diverged at gradient step {step}: loss = {loss}")]
pub struct Divergence {
    pub step: u64,
    pub loss: f64,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy: a uniform random action with probability ε, else the greedy one.
pub fn select_action<R: Rng + ?Sized>(net: &QNetwork, state: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..net.action_count())
    } else {
        argmax(&net.forward(state))
    }
}

/// r if terminal, otherwise r + γ max_a Q_target(s', a).
pub fn td_target(reward: f64, next_state: &[f64], terminal: bool, target: &QNetwork, gamma: f64) -> f64 {
    if terminal || gamma == 0.0 {
        return reward;
    }
    let q = target.forward(next_state);
    reward + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// One SGD step on the mean squared TD error. Only `main` changes; the
/// returned loss is measured before the update.
pub fn train_step(
    main: &mut QNetwork,
    target: &QNetwork,
    batch: &[&Experience],
    cfg: &AgentConfig,
) -> Result<f64, Divergence> {
    assert!(!batch.is_empty(), "train_step needs a non-empty batch");
    let targets: Vec<f64> = batch
        .iter()
        .map(|e| td_target(e.reward, &e.next_state, e.terminal, target, cfg.gamma))
        .collect();
    let triples: Vec<(&[f64], usize, f64)> = batch
        .iter()
        .zip(&targets)
        .map(|(e, &y)| (e.state.as_slice(), e.action, y))
        .collect();
    let (loss, grads) = main.loss_and_gradients(&triples);
    if !loss.is_finite() {
        return Err(Divergence { step: 0, loss });
    }
    main.apply_gradients(&grads, cfg.learning_rate);
    if !main.is_finite() {
        return Err(Divergence { step: 0, loss: f64::NAN });
    }
    Ok(loss)
}

/// Target weights become a bitwise copy of the main weights.
pub fn sync_target(main: &QNetwork, target: &mut QNetwork) {
    target.copy_from(main);
}

/// Main/target network pair with replay memory and an ε-greedy policy.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    main: QNetwork,
    target: QNetwork,
    memory: ReplayMemory,
    cfg: AgentConfig,
    rng: ChaCha8Rng,
    decisions: u64,
    train_steps: u64,
    last_loss: Option<f64>,
}

impl DqnAgent {
    pub fn new(input_dim: usize, action_count: usize, cfg: AgentConfig, mut rng: ChaCha8Rng) -> Self {
        let main = QNetwork::new(&cfg.layer_sizes(input_dim, action_count), &mut rng);
        Self::with_network(main, cfg, rng)
    }

    pub fn with_network(main: QNetwork, cfg: AgentConfig, rng: ChaCha8Rng) -> Self {
        let target = main.clone();
        Self {
            main,
            target,
            memory: ReplayMemory::new(cfg.replay_capacity),
            cfg,
            rng,
            decisions: 0,
            train_steps: 0,
            last_loss: None,
        }
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn main(&self) -> &QNetwork {
        &self.main
    }

    pub fn target(&self) -> &QNetwork {
        &self.target
    }

    pub fn memory(&self) -> &ReplayMemory {
        &self.memory
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    pub fn last_loss(&self) -> Option<f64> {
        self.last_loss
    }

    /// Current exploration rate, driven by the number of exploring decisions.
    pub fn epsilon(&self) -> f64 {
        self.cfg.epsilon.value(self.decisions)
    }

    /// Picks an action. With `explore` false the policy is purely greedy and
    /// the ε schedule does not advance.
    pub fn act(&mut self, state: &[f64], explore: bool) -> usize {
        if explore {
            let eps = self.epsilon();
            self.decisions += 1;
            select_action(&self.main, state, eps, &mut self.rng)
        } else {
            argmax(&self.main.forward(state))
        }
    }

    pub fn q_values(&self, state: &[f64]) -> Vec<f64> {
        self.main.forward(state)
    }

    pub fn remember(&mut self, e: Experience) {
        self.memory.push(e);
    }

    /// One minibatch update once warmup is complete; syncs the target network
    /// every `target_sync_period` updates.
    pub fn learn(&mut self) -> Result<Option<f64>, Divergence> {
        let needed = self.cfg.warmup_steps.max(self.cfg.minibatch_size);
        if self.memory.len() < needed {
            return Ok(None);
        }
        let batch = self
            .memory
            .sample(self.cfg.minibatch_size, &mut self.rng)
            .expect("warmup ensures enough experiences");
        let loss = train_step(&mut self.main, &self.target, &batch, &self.cfg).map_err(|mut d| {
            d.step = self.train_steps;
            d
        })?;
        self.train_steps += 1;
        if self.train_steps % self.cfg.target_sync_period == 0 {
            sync_target(&self.main, &mut self.target);
        }
        self.last_loss = Some(loss);
        Ok(Some(loss))
    }
}
