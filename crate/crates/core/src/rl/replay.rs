use rand::Rng;
use std::collections::VecDeque;
use thiserror::Error;

/// One transition (S, A, R, S').
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// True only for genuine terminal states; truncation keeps bootstrapping.
    pub terminal: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("warmup incomplete: requested {requested} experiences, memory holds {available}")]
pub struct WarmupIncomplete {
    pub requested: usize,
    pub available: usize,
}

/// Fixed-capacity ring of the most recent experiences.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    buf: VecDeque<Experience>,
    capacity: usize,
    pushed: u64,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "replay capacity must be positive");
        Self {
            buf: VecDeque::with_capacity(capacity.min(1 << 16)),
            capacity,
            pushed: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Total pushes since creation, including evicted ones.
    pub fn pushed(&self) -> u64 {
        self.pushed
    }

    /// Appends `e`, evicting the oldest entry when full.
    pub fn push(&mut self, e: Experience) {
        if let Some(first) = self.buf.front() {
            debug_assert_eq!(first.state.len(), e.state.len());
        }
        debug_assert_eq!(e.state.len(), e.next_state.len());
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(e);
        self.pushed += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.buf.iter()
    }

    /// Uniform sample of `size` distinct entries.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        size: usize,
        rng: &mut R,
    ) -> Result<Vec<&Experience>, WarmupIncomplete> {
        if size > self.buf.len() {
            return Err(WarmupIncomplete {
                requested: size,
                available: self.buf.len(),
            });
        }
        Ok(rand::seq::index::sample(rng, self.buf.len(), size)
            .into_iter()
            .map(|i| &self.buf[i])
            .collect())
    }
}
