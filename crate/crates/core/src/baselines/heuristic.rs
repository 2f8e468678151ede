//! Threshold heuristic: a weighted score of binary load, channel and service
//! indicators compared against the mean score over all indicator values.

use crate::net::Rat;
use crate::sim::SteeringState;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicWeights {
    /// Weight of the eNB load bit.
    pub alpha: f64,
    /// Weight of the gNB load bit.
    pub beta: f64,
    /// Weight of the gNB channel bit.
    pub gamma: f64,
    /// Weight of the service-type bit.
    pub delta: f64,
    /// A RAT counts as loaded when its queue holds more packets than this.
    pub load_cutoff_packets: usize,
    /// A channel counts as good at or above this SINR.
    pub sinr_cutoff_db: f64,
}

impl Default for HeuristicWeights {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            beta: 0.25,
            gamma: 0.25,
            delta: 0.25,
            load_cutoff_packets: 50,
            sinr_cutoff_db: 10.0,
        }
    }
}

impl HeuristicWeights {
    pub fn is_valid(&self) -> bool {
        [self.alpha, self.beta, self.gamma, self.delta]
            .iter()
            .all(|w| *w >= 0.0 && w.is_finite())
    }

    /// Mean of the score over the 16 points of the binary input lattice.
    pub fn threshold(&self) -> f64 {
        let mut sum = 0.0;
        for bits in 0u8..16 {
            let b = |i: u8| (bits >> i) & 1 == 1;
            sum += heuristic_score(b(0), b(1), b(2), b(3), self);
        }
        sum / 16.0
    }
}

/// Binary indicators the heuristic scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeuristicInputs {
    pub enb_loaded: bool,
    pub gnb_loaded: bool,
    pub enb_channel_good: bool,
    pub gnb_channel_good: bool,
    pub throughput_heavy: bool,
}

impl HeuristicInputs {
    pub fn from_state(s: &SteeringState, w: &HeuristicWeights) -> Self {
        Self {
            enb_loaded: s.queue(Rat::Lte) > w.load_cutoff_packets,
            gnb_loaded: s.queue(Rat::Nr) > w.load_cutoff_packets,
            enb_channel_good: s.sinr(Rat::Lte) >= w.sinr_cutoff_db,
            gnb_channel_good: s.sinr(Rat::Nr) >= w.sinr_cutoff_db,
            throughput_heavy: s.class.is_throughput_heavy(),
        }
    }
}

/// T_u = α l_e + β l_g + γ ch_g + δ S_u.
pub fn heuristic_score(
    enb_loaded: bool,
    gnb_loaded: bool,
    gnb_channel_good: bool,
    throughput_heavy: bool,
    w: &HeuristicWeights,
) -> f64 {
    let f = |b: bool| if b { 1.0 } else { 0.0 };
    w.alpha * f(enb_loaded) + w.beta * f(gnb_loaded) + w.gamma * f(gnb_channel_good) + w.delta * f(throughput_heavy)
}

/// NR strictly above the threshold, LTE otherwise.
pub fn heuristic_decide(score: f64, threshold: f64) -> Rat {
    if score > threshold {
        Rat::Nr
    } else {
        Rat::Lte
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicPolicy {
    weights: HeuristicWeights,
    threshold: f64,
}

impl HeuristicPolicy {
    pub fn new(weights: HeuristicWeights) -> Self {
        Self {
            threshold: weights.threshold(),
            weights,
        }
    }

    pub fn weights(&self) -> &HeuristicWeights {
        &self.weights
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn decide(&self, state: &SteeringState) -> Rat {
        let i = HeuristicInputs::from_state(state, &self.weights);
        let score = heuristic_score(i.enb_loaded, i.gnb_loaded, i.gnb_channel_good, i.throughput_heavy, &self.weights);
        heuristic_decide(score, self.threshold)
    }
}
