//! Per-link SINR, Shannon capacity, the link capacity constraint and delay terms.

use super::{BaseStation, ChannelRealization, Packet};

/// RBG ownership per base station for one TTI.
///
/// Each (h, b) slot holds at most one UE, so intra-cell exclusivity holds by
/// construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RbgAllocation {
    owners: Vec<Vec<Option<usize>>>,
}

impl RbgAllocation {
    pub fn new(bss: &[BaseStation]) -> Self {
        Self::with_rbg_counts(&bss.iter().map(|b| b.rbg_count).collect::<Vec<_>>())
    }

    pub fn with_rbg_counts(counts: &[usize]) -> Self {
        Self {
            owners: counts.iter().map(|&n| vec![None; n]).collect(),
        }
    }

    /// Sets x_{h,u,b} = 1. Panics if the RBG already belongs to another UE.
    pub fn assign(&mut self, h: usize, u: usize, b: usize) {
        let slot = &mut self.owners[b][h];
        assert!(
            slot.is_none() || *slot == Some(u),
            "RBG {h} of BS {b} already allocated to UE {:?}",
            slot
        );
        *slot = Some(u);
    }

    pub fn clear(&mut self, b: usize) {
        self.owners[b].fill(None);
    }

    pub fn owner(&self, h: usize, b: usize) -> Option<usize> {
        self.owners[b][h]
    }

    /// x_{h,u,b}.
    pub fn indicator(&self, h: usize, u: usize, b: usize) -> bool {
        self.owners[b][h] == Some(u)
    }

    /// Whether BS `b` transmits on RBG `h` at all.
    pub fn is_active(&self, h: usize, b: usize) -> bool {
        self.owners[b][h].is_some()
    }

    pub fn rbgs_of(&self, u: usize, b: usize) -> impl Iterator<Item = usize> + '_ {
        self.owners[b]
            .iter()
            .enumerate()
            .filter(move |(_, o)| **o == Some(u))
            .map(|(h, _)| h)
    }

    pub fn rbg_count(&self, b: usize) -> usize {
        self.owners[b].len()
    }

    /// Checks that the allocation is shaped like `bss` and that the per-RBG
    /// bandwidth tiles each carrier exactly.
    pub fn is_consistent_with(&self, bss: &[BaseStation]) -> bool {
        self.owners.len() == bss.len()
            && bss.iter().zip(&self.owners).all(|(bs, o)| {
                o.len() == bs.rbg_count
                    && ((bs.rbg_bandwidth() * bs.rbg_count as f64 - bs.bandwidth).abs()
                        <= 1e-9 * bs.bandwidth)
            })
    }
}

/// SINR of UE `u` on RBG `h` of `bs`. Interferers contribute only on RBGs
/// they have allocated in this TTI.
pub fn compute_sinr(
    h: usize,
    u: usize,
    bs: &BaseStation,
    interferers: &[&BaseStation],
    alloc: &RbgAllocation,
    chan: &ChannelRealization,
) -> f64 {
    let signal = bs.rbg_power() * chan.gain(h, u, bs.id);
    let noise = bs.rbg_bandwidth() * chan.noise_density();
    let interference: f64 = interferers
        .iter()
        .filter(|m| m.id != bs.id && h < m.rbg_count && alloc.is_active(h, m.id))
        .map(|m| m.rbg_power() * chan.gain(h, u, m.id))
        .sum();
    signal / (noise + interference)
}

/// Shannon capacity in bits/s over the RBGs allocated to `u` at `bs`.
pub fn link_capacity(
    u: usize,
    bs: &BaseStation,
    interferers: &[&BaseStation],
    alloc: &RbgAllocation,
    chan: &ChannelRealization,
) -> f64 {
    let w = bs.rbg_bandwidth();
    alloc
        .rbgs_of(u, bs.id)
        .map(|h| w * (1.0 + compute_sinr(h, u, bs, interferers, alloc, chan)).log2())
        .sum()
}

/// Mean linear SINR across every RBG of `bs`, as reported by a UE whether or
/// not it is currently scheduled there.
pub fn wideband_sinr(
    u: usize,
    bs: &BaseStation,
    interferers: &[&BaseStation],
    alloc: &RbgAllocation,
    chan: &ChannelRealization,
) -> f64 {
    let n = bs.rbg_count;
    (0..n)
        .map(|h| compute_sinr(h, u, bs, interferers, alloc, chan))
        .sum::<f64>()
        / n as f64
}

/// True iff Σ_f d^f · x^f ≤ C for the flows on one link.
///
/// `flows` yields (demand in bits/s, routed over this link).
pub fn check_capacity_constraint<I>(flows: I, capacity: f64) -> bool
where
    I: IntoIterator<Item = (f64, bool)>,
{
    let load: f64 = flows
        .into_iter()
        .filter(|&(_, used)| used)
        .map(|(d, _)| d)
        .sum();
    load <= capacity
}

/// L / C in seconds; an unserved link (C = 0) yields +inf.
pub fn transmission_delay(packet_bits: f64, capacity: f64) -> f64 {
    if capacity <= 0.0 {
        f64::INFINITY
    } else {
        packet_bits / capacity
    }
}

/// Transmission plus queueing delay of a packet dequeued at `tti_now`.
pub fn total_delay(packet: &Packet, capacity: f64, tti_now: u64, tti_duration: f64) -> f64 {
    debug_assert!(packet.enqueue_tti <= tti_now);
    let queueing = (tti_now - packet.enqueue_tti) as f64 * tti_duration;
    transmission_delay(packet.size_bits as f64, capacity) + queueing
}
