use crate::net::Rat;
use crate::traffic::TrafficClass;

/// Raw observation for one flow's steering decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringState {
    pub class: TrafficClass,
    /// Wide-band SINR in dB at the UE's eNB and gNB, indexed by `Rat::index`.
    pub sinr_db: [f64; 2],
    /// Packets buffered at the UE's eNB and gNB, indexed by `Rat::index`.
    pub queue: [usize; 2],
}

impl SteeringState {
    pub fn sinr(&self, rat: Rat) -> f64 {
        self.sinr_db[rat.index()]
    }

    pub fn queue(&self, rat: Rat) -> usize {
        self.queue[rat.index()]
    }
}

/// Length of the encoded state vector: 3-way one-hot class, two SINRs, two
/// queue lengths.
pub const STATE_DIM: usize = 7;

/// Steering actions map to indices 0 (LTE) and 1 (NR).
pub const ACTION_COUNT: usize = 2;

pub fn action_to_rat(action: usize) -> Rat {
    match action {
        0 => Rat::Lte,
        1 => Rat::Nr,
        _ => panic!("steering action out of range: {action}"),
    }
}

pub fn rat_to_action(rat: Rat) -> usize {
    rat.index()
}

/// Affine normalisation of raw observations into [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateEncoder {
    pub sinr_min_db: f64,
    pub sinr_max_db: f64,
    pub queue_capacity: usize,
}

impl StateEncoder {
    pub fn new(queue_capacity: usize) -> Self {
        Self {
            sinr_min_db: -10.0,
            sinr_max_db: 40.0,
            queue_capacity,
        }
    }

    fn sinr(&self, db: f64) -> f64 {
        ((db - self.sinr_min_db) / (self.sinr_max_db - self.sinr_min_db)).clamp(0.0, 1.0)
    }

    fn queue(&self, len: usize) -> f64 {
        (len as f64 / self.queue_capacity as f64).min(1.0)
    }

    pub fn encode(&self, s: &SteeringState) -> [f64; STATE_DIM] {
        let mut v = [0.0; STATE_DIM];
        v[s.class.index()] = 1.0;
        v[3] = self.sinr(s.sinr_db[0]);
        v[4] = self.sinr(s.sinr_db[1]);
        v[5] = self.queue(s.queue[0]);
        v[6] = self.queue(s.queue[1]);
        v
    }
}
