use super::{BaseStation, RbgAllocation};

/// Round-robin RBG scheduler, one RBG at a time over UEs with pending data.
///
/// A per-BS cursor remembers which UE is next in line so leftover RBGs rotate
/// across TTIs.
#[derive(Debug, Clone, Default)]
pub struct RoundRobinScheduler {
    cursor: Vec<usize>,
}

impl RoundRobinScheduler {
    pub fn new(bs_count: usize) -> Self {
        Self {
            cursor: vec![0; bs_count],
        }
    }

    /// Rewrites the allocation of `bs` for this TTI.
    pub fn schedule(&mut self, bs: &BaseStation, alloc: &mut RbgAllocation) {
        alloc.clear(bs.id);
        let backlogged: Vec<usize> = bs
            .queues
            .iter()
            .filter(|(_, q)| !q.is_empty())
            .map(|(&u, _)| u)
            .collect();
        if backlogged.is_empty() {
            return;
        }
        let cursor = self.cursor[bs.id];
        let start = backlogged.iter().position(|&u| u >= cursor).unwrap_or(0);
        let n = backlogged.len();
        for h in 0..bs.rbg_count {
            alloc.assign(h, backlogged[(start + h) % n], bs.id);
        }
        self.cursor[bs.id] = backlogged[(start + bs.rbg_count) % n];
    }
}
