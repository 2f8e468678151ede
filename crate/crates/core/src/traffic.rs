//! Traffic classes and Poisson packet sources.

use crate::net::Packet;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficClass {
    Voice,
    Video,
    Gaming,
}

impl TrafficClass {
    pub const COUNT: usize = 3;
    pub const ALL: [TrafficClass; 3] = [TrafficClass::Voice, TrafficClass::Video, TrafficClass::Gaming];

    pub fn index(self) -> usize {
        match self {
            TrafficClass::Voice => 0,
            TrafficClass::Video => 1,
            TrafficClass::Gaming => 2,
        }
    }

    /// Video and gaming are throughput-heavy; voice is not.
    pub fn is_throughput_heavy(self) -> bool {
        !matches!(self, TrafficClass::Voice)
    }
}

impl fmt::Display for TrafficClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrafficClass::Voice => "voice",
            TrafficClass::Video => "video",
            TrafficClass::Gaming => "gaming",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficClassSpec {
    pub class: TrafficClass,
    pub packet_size_bytes: u32,
    /// Required throughput, bits/s.
    pub throughput_qos_bps: f64,
    /// Delay budget, seconds.
    pub delay_qos_s: f64,
    pub mix_fraction: f64,
}

impl TrafficClassSpec {
    pub fn packet_bits(&self) -> u32 {
        self.packet_size_bytes * 8
    }
}

/// Default voice/video/gaming table.
pub fn default_traffic_table() -> Vec<TrafficClassSpec> {
    vec![
        TrafficClassSpec {
            class: TrafficClass::Voice,
            packet_size_bytes: 30,
            throughput_qos_bps: 0.1e6,
            delay_qos_s: 0.100,
            mix_fraction: 0.20,
        },
        TrafficClassSpec {
            class: TrafficClass::Video,
            packet_size_bytes: 250,
            throughput_qos_bps: 10e6,
            delay_qos_s: 0.080,
            mix_fraction: 0.50,
        },
        TrafficClassSpec {
            class: TrafficClass::Gaming,
            packet_size_bytes: 120,
            throughput_qos_bps: 5e6,
            delay_qos_s: 0.040,
            mix_fraction: 0.30,
        },
    ]
}

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("at least one UE is required to carry traffic")]
    NoUes,
    #[error("offered load must be positive, got {0} bit/s")]
    NonPositiveLoad(f64),
    #[error("mix fractions sum to {0}, expected 1")]
    MixFractions(f64),
    #[error("traffic class {0} listed more than once")]
    DuplicateClass(TrafficClass),
    #[error("invalid parameters for class {0}: {1}")]
    InvalidSpec(TrafficClass, &'static str),
}

/// Checks class uniqueness, positive parameters and Σ mix_fraction = 1.
pub fn validate_traffic_table(specs: &[TrafficClassSpec]) -> Result<(), TrafficError> {
    for (i, s) in specs.iter().enumerate() {
        if specs[..i].iter().any(|o| o.class == s.class) {
            return Err(TrafficError::DuplicateClass(s.class));
        }
        if s.packet_size_bytes == 0 {
            return Err(TrafficError::InvalidSpec(s.class, "packet size must be positive"));
        }
        if !(s.throughput_qos_bps > 0.0) || !(s.delay_qos_s > 0.0) {
            return Err(TrafficError::InvalidSpec(s.class, "QoS targets must be positive"));
        }
        if !(0.0..=1.0).contains(&s.mix_fraction) {
            return Err(TrafficError::InvalidSpec(s.class, "mix fraction must lie in [0, 1]"));
        }
    }
    let sum: f64 = specs.iter().map(|s| s.mix_fraction).sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(TrafficError::MixFractions(sum));
    }
    Ok(())
}

/// One flow: a Poisson packet stream of a single class owned by one UE.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSource {
    pub id: usize,
    pub ue: usize,
    pub class: TrafficClass,
    pub packet_bits: u32,
    /// Mean packets per TTI.
    pub arrival_rate: f64,
}

impl FlowSource {
    /// Offered load d^f in bits/s.
    pub fn offered_bps(&self, tti_duration: f64) -> f64 {
        self.arrival_rate * self.packet_bits as f64 / tti_duration
    }
}

/// Poisson(λ) packets for one TTI, stamped with that TTI.
pub fn generate_arrivals<R: Rng + ?Sized>(src: &FlowSource, tti: u64, rng: &mut R) -> Vec<Packet> {
    if src.arrival_rate <= 0.0 {
        return Vec::new();
    }
    let n = Poisson::new(src.arrival_rate)
        .expect("positive rate")
        .sample(rng) as usize;
    vec![
        Packet {
            flow: src.id,
            class: src.class,
            size_bits: src.packet_bits,
            enqueue_tti: tti,
        };
        n
    ]
}

/// Splits `total_load_bps` by class mix and then evenly over the UEs carrying
/// each class.
///
/// Class-to-UE assignment walks slots `j = 0..max(ue_count, classes)` and
/// gives slot `j` to UE `j mod ue_count` with class `j mod classes`, so every
/// UE carries at least one class and no UE carries a class twice. Classes with
/// a zero mix fraction produce no flows.
pub fn build_traffic_mix(
    total_load_bps: f64,
    specs: &[TrafficClassSpec],
    ue_count: usize,
    tti_duration: f64,
) -> Result<Vec<FlowSource>, TrafficError> {
    if ue_count == 0 {
        return Err(TrafficError::NoUes);
    }
    if !(total_load_bps > 0.0) {
        return Err(TrafficError::NonPositiveLoad(total_load_bps));
    }
    validate_traffic_table(specs)?;
    let active: Vec<&TrafficClassSpec> = specs.iter().filter(|s| s.mix_fraction > 0.0).collect();
    let slots = ue_count.max(active.len());
    let assignment: Vec<(usize, &TrafficClassSpec)> = (0..slots)
        .map(|j| (j % ue_count, active[j % active.len()]))
        .collect();
    let flows = assignment
        .iter()
        .enumerate()
        .map(|(id, &(ue, spec))| {
            let carriers = assignment.iter().filter(|(_, s)| s.class == spec.class).count();
            let per_flow_bps = total_load_bps * spec.mix_fraction / carriers as f64;
            FlowSource {
                id,
                ue,
                class: spec.class,
                packet_bits: spec.packet_bits(),
                arrival_rate: per_flow_bps * tti_duration / spec.packet_bits() as f64,
            }
        })
        .collect();
    Ok(flows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TTI: f64 = 1e-3;

    fn class_load(flows: &[FlowSource], class: TrafficClass) -> f64 {
        flows
            .iter()
            .filter(|f| f.class == class)
            .map(|f| f.offered_bps(TTI))
            .sum()
    }

    #[test]
    fn default_mix_splits_ten_megabits() {
        let flows = build_traffic_mix(10e6, &default_traffic_table(), 30, TTI).unwrap();
        assert!((class_load(&flows, TrafficClass::Voice) - 2e6).abs() < 1e-6);
        assert!((class_load(&flows, TrafficClass::Video) - 5e6).abs() < 1e-6);
        assert!((class_load(&flows, TrafficClass::Gaming) - 3e6).abs() < 1e-6);
    }

    #[test]
    fn single_ue_single_class_carries_everything() {
        let mut table = default_traffic_table();
        table[0].mix_fraction = 0.0;
        table[1].mix_fraction = 1.0;
        table[2].mix_fraction = 0.0;
        let flows = build_traffic_mix(7e6, &table, 1, TTI).unwrap();
        assert_eq!(flows.len(), 1);
        assert_eq!(flows[0].class, TrafficClass::Video);
        assert!((flows[0].offered_bps(TTI) - 7e6).abs() < 1e-6);
    }

    #[test]
    fn every_ue_carries_a_class_once() {
        for n in 1..12 {
            let flows = build_traffic_mix(5e6, &default_traffic_table(), n, TTI).unwrap();
            for u in 0..n {
                let classes: Vec<_> = flows.iter().filter(|f| f.ue == u).map(|f| f.class).collect();
                assert!(!classes.is_empty());
                let mut dedup = classes.clone();
                dedup.dedup();
                assert_eq!(dedup.len(), classes.len());
            }
        }
    }

    #[test]
    fn zero_ues_is_a_configuration_error() {
        assert_eq!(
            build_traffic_mix(5e6, &default_traffic_table(), 0, TTI),
            Err(TrafficError::NoUes)
        );
    }

    #[test]
    fn bad_mix_is_rejected() {
        let mut table = default_traffic_table();
        table[2].mix_fraction = 0.2;
        assert!(matches!(validate_traffic_table(&table), Err(TrafficError::MixFractions(_))));
    }

    #[test]
    fn zero_rate_never_emits() {
        let src = FlowSource { id: 0, ue: 0, class: TrafficClass::Voice, packet_bits: 240, arrival_rate: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|t| generate_arrivals(&src, t, &mut rng).is_empty()));
    }

    #[test]
    fn poisson_mean_matches_rate() {
        let src = FlowSource { id: 3, ue: 0, class: TrafficClass::Video, packet_bits: 2000, arrival_rate: 2.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000u64;
        let total: usize = (0..n).map(|t| generate_arrivals(&src, t, &mut rng).len()).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn arrivals_are_stamped_and_reproducible() {
        let src = FlowSource { id: 9, ue: 2, class: TrafficClass::Gaming, packet_bits: 960, arrival_rate: 3.0 };
        let a = generate_arrivals(&src, 17, &mut ChaCha8Rng::seed_from_u64(8));
        let b = generate_arrivals(&src, 17, &mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.enqueue_tti == 17 && p.flow == 9 && p.size_bits == 960));
    }
}
