//! QoS ratios, the weighted steering metric and the sigmoid reward.

use crate::traffic::{TrafficClass, TrafficClassSpec};
use serde::{Deserialize, Serialize};

/// Default clamp applied to both QoS ratios before they are combined.
pub const DEFAULT_RATIO_CAP: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QosWeights {
    /// Weight of the delay ratio.
    pub w1: f64,
    /// Weight of the throughput ratio.
    pub w2: f64,
}

impl Default for QosWeights {
    fn default() -> Self {
        Self { w1: 0.5, w2: 0.5 }
    }
}

impl QosWeights {
    pub fn new(w1: f64, w2: f64) -> Option<Self> {
        let w = Self { w1, w2 };
        w.is_valid().then_some(w)
    }

    pub fn is_valid(&self) -> bool {
        self.w1 >= 0.0 && self.w2 >= 0.0 && (self.w1 + self.w2 - 1.0).abs() <= 1e-9
    }
}

/// Delay and throughput measured for one class at one BS over a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KpiSample {
    pub class: TrafficClass,
    pub bs: usize,
    /// Seconds; 0 when nothing was measured.
    pub delay: f64,
    /// bits/s.
    pub throughput: f64,
    /// TTIs.
    pub window: u64,
}

/// r^D = D_QoS / D. An empty measurement (D = 0) counts as the capped maximum.
pub fn delay_ratio(sample: &KpiSample, spec: &TrafficClassSpec, r_cap: f64) -> f64 {
    if sample.delay <= 0.0 {
        r_cap
    } else {
        spec.delay_qos_s / sample.delay
    }
}

/// r^T = T / T_QoS.
pub fn throughput_ratio(sample: &KpiSample, spec: &TrafficClassSpec) -> f64 {
    sample.throughput / spec.throughput_qos_bps
}

/// M = w1 · r^D + w2 · r^T.
pub fn steering_metric(r_delay: f64, r_throughput: f64, w: &QosWeights) -> f64 {
    w.w1 * r_delay + w.w2 * r_throughput
}

/// Logistic squashing of M into (0, 1).
pub fn reward(m: f64) -> f64 {
    1.0 / (1.0 + (-m).exp())
}

/// Clamps both ratios into [0, r_cap], combines them and squashes the result.
pub fn reward_for(sample: &KpiSample, spec: &TrafficClassSpec, w: &QosWeights, r_cap: f64) -> f64 {
    let rd = delay_ratio(sample, spec, r_cap).clamp(0.0, r_cap);
    let rt = throughput_ratio(sample, spec).clamp(0.0, r_cap);
    reward(steering_metric(rd, rt, w))
}
