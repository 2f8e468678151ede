//! Tabular Q-learning over a quantised steering state.

use crate::rl::{argmax, EpsilonSchedule};
use crate::sim::{SteeringState, ACTION_COUNT};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub const SINR_BUCKETS: usize = 4;
pub const QUEUE_LEVELS: usize = 3;
/// 3 classes × 4 × 4 SINR buckets × 3 × 3 queue levels.
pub const STATE_COUNT: usize = 3 * SINR_BUCKETS * SINR_BUCKETS * QUEUE_LEVELS * QUEUE_LEVELS;

/// Bucket edges used to quantise a `SteeringState`. A value equal to an edge
/// falls in the upper bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretizer {
    pub sinr_edges_db: [f64; SINR_BUCKETS - 1],
    pub queue_edges: [usize; QUEUE_LEVELS - 1],
}

impl Default for Discretizer {
    fn default() -> Self {
        Self {
            sinr_edges_db: [0.0, 10.0, 20.0],
            queue_edges: [50, 200],
        }
    }
}

impl Discretizer {
    pub fn is_valid(&self) -> bool {
        self.sinr_edges_db.windows(2).all(|w| w[0] < w[1]) && self.queue_edges[0] < self.queue_edges[1]
    }

    fn sinr_bucket(&self, db: f64) -> usize {
        self.sinr_edges_db.iter().filter(|&&e| db >= e).count()
    }

    fn queue_level(&self, len: usize) -> usize {
        self.queue_edges.iter().filter(|&&e| len >= e).count()
    }

    /// Row-major key over (class, SINR_eNB, SINR_gNB, queue_eNB, queue_gNB).
    pub fn key(&self, s: &SteeringState) -> usize {
        let mut k = s.class.index();
        k = k * SINR_BUCKETS + self.sinr_bucket(s.sinr_db[0]);
        k = k * SINR_BUCKETS + self.sinr_bucket(s.sinr_db[1]);
        k = k * QUEUE_LEVELS + self.queue_level(s.queue[0]);
        k * QUEUE_LEVELS + self.queue_level(s.queue[1])
    }
}

/// Sparse Q-table; unseen states read as all zeros.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QTable {
    values: HashMap<usize, [f64; ACTION_COUNT]>,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: usize) -> [f64; ACTION_COUNT] {
        self.values.get(&key).copied().unwrap_or([0.0; ACTION_COUNT])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &[f64; ACTION_COUNT])> {
        self.values.iter()
    }

    /// Q(s,a) ← Q(s,a) + α (r + γ max_a' Q(s',a') − Q(s,a)).
    pub fn update(&mut self, s: usize, a: usize, r: f64, s_next: usize, alpha: f64, gamma: f64) {
        let best_next = self.get(s_next).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let row = self.values.entry(s).or_insert([0.0; ACTION_COUNT]);
        row[a] += alpha * (r + gamma * best_next - row[a]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabularConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    pub discretizer: Discretizer,
}

impl Default for TabularConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.9,
            epsilon: EpsilonSchedule::default(),
            discretizer: Discretizer::default(),
        }
    }
}

impl TabularConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(format!("tabular alpha must lie in [0, 1], got {}", self.alpha));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(format!("tabular gamma must lie in [0, 1), got {}", self.gamma));
        }
        if !self.epsilon.is_valid() {
            return Err("tabular epsilon schedule needs 0 <= end <= start <= 1".into());
        }
        if !self.discretizer.is_valid() {
            return Err("bucket edges must be strictly increasing".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TabularAgent {
    table: QTable,
    cfg: TabularConfig,
    rng: ChaCha8Rng,
    decisions: u64,
}

impl TabularAgent {
    pub fn new(cfg: TabularConfig, rng: ChaCha8Rng) -> Self {
        Self {
            table: QTable::new(),
            cfg,
            rng,
            decisions: 0,
        }
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    pub fn config(&self) -> &TabularConfig {
        &self.cfg
    }

    pub fn key(&self, s: &SteeringState) -> usize {
        self.cfg.discretizer.key(s)
    }

    pub fn epsilon(&self) -> f64 {
        self.cfg.epsilon.value(self.decisions)
    }

    pub fn act_on_key(&mut self, key: usize, explore: bool) -> usize {
        let eps = if explore {
            let e = self.epsilon();
            self.decisions += 1;
            e
        } else {
            0.0
        };
        if explore && self.rng.random::<f64>() < eps {
            self.rng.random_range(0..ACTION_COUNT)
        } else {
            argmax(&self.table.get(key))
        }
    }

    pub fn act(&mut self, s: &SteeringState, explore: bool) -> usize {
        let key = self.key(s);
        self.act_on_key(key, explore)
    }

    pub fn learn(&mut self, s: usize, a: usize, r: f64, s_next: usize) {
        self.table.update(s, a, r, s_next, self.cfg.alpha, self.cfg.gamma);
    }
}
