//! Radio network model: base stations, user equipment, channel, links and queues.
//!
//! Every UE is dually attached to the single LTE eNB and to its nearest NR
//! gNB. Downlink capacity is the Shannon sum over the resource-block groups
//! (RBGs) a scheduler hands to the UE in one TTI.

mod channel;
mod link;
mod queue;
mod scheduler;

pub use channel::{
    channel_gain, path_loss_db, ChannelModel, ChannelParams, ChannelRealization, MIN_DISTANCE_M,
};
pub use link::{
    check_capacity_constraint, compute_sinr, link_capacity, total_delay, transmission_delay,
    wideband_sinr, RbgAllocation,
};
pub use queue::{Packet, PacketQueue};
pub use scheduler::RoundRobinScheduler;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Radio access technology of a base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rat {
    Lte,
    Nr,
}

impl Rat {
    pub const ALL: [Rat; 2] = [Rat::Lte, Rat::Nr];

    pub fn index(self) -> usize {
        match self {
            Rat::Lte => 0,
            Rat::Nr => 1,
        }
    }

    pub fn other(self) -> Rat {
        match self {
            Rat::Lte => Rat::Nr,
            Rat::Nr => Rat::Lte,
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rat::Lte => f.write_str("lte"),
            Rat::Nr => f.write_str("nr"),
        }
    }
}

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone)]
pub struct BaseStation {
    pub id: usize,
    pub rat: Rat,
    /// Watts, split uniformly over the RBGs.
    pub tx_power_total: f64,
    /// Hz.
    pub bandwidth: f64,
    /// Hz.
    pub carrier_freq: f64,
    pub position: Position,
    pub rbg_count: usize,
    /// Per-UE transmission buffers, keyed by UE id.
    pub queues: BTreeMap<usize, PacketQueue>,
}

impl BaseStation {
    pub fn new(
        id: usize,
        rat: Rat,
        tx_power_total: f64,
        bandwidth: f64,
        carrier_freq: f64,
        position: Position,
        rbg_count: usize,
    ) -> Self {
        assert!(tx_power_total > 0.0, "tx power must be positive");
        assert!(bandwidth > 0.0, "bandwidth must be positive");
        assert!(rbg_count >= 1, "need at least one RBG");
        Self {
            id,
            rat,
            tx_power_total,
            bandwidth,
            carrier_freq,
            position,
            rbg_count,
            queues: BTreeMap::new(),
        }
    }

    /// Power on one RBG, p_{h,b}.
    pub fn rbg_power(&self) -> f64 {
        self.tx_power_total / self.rbg_count as f64
    }

    /// Bandwidth of one RBG, ω_h.
    pub fn rbg_bandwidth(&self) -> f64 {
        self.bandwidth / self.rbg_count as f64
    }

    /// Total packets buffered for all UEs.
    pub fn queued_packets(&self) -> usize {
        self.queues.values().map(PacketQueue::len).sum()
    }

    pub fn queue(&self, ue: usize) -> Option<&PacketQueue> {
        self.queues.get(&ue)
    }

    pub fn queue_mut(&mut self, ue: usize) -> Option<&mut PacketQueue> {
        self.queues.get_mut(&ue)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserEquipment {
    pub id: usize,
    pub position: Position,
    pub lte_bs: usize,
    pub nr_bs: usize,
    pub flows: Vec<usize>,
}

impl UserEquipment {
    /// Serving base station for the given RAT.
    pub fn attachment(&self, rat: Rat) -> usize {
        match rat {
            Rat::Lte => self.lte_bs,
            Rat::Nr => self.nr_bs,
        }
    }
}
