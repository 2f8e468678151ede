use crate::config::{SimulationConfig, TopologyConfig};
use crate::net::{
    link_capacity, wideband_sinr, BaseStation, ChannelModel, ChannelParams, ChannelRealization, Packet,
    PacketQueue, Position, Rat, RbgAllocation, RoundRobinScheduler, UserEquipment,
};
use crate::traffic::{build_traffic_mix, generate_arrivals, FlowSource, TrafficClassSpec, TrafficError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SteeringState;

/// Independent random streams derived from one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Topology = 0,
    Fading = 1,
    Traffic = 2,
    Agent = 3,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// A packet that left a queue in the current TTI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivery {
    pub packet: Packet,
    pub rat: Rat,
    pub bs: usize,
    /// Queueing plus transmission delay in seconds.
    pub delay: f64,
}

/// Outcome of the radio part of one TTI.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TtiOutcome {
    pub deliveries: Vec<Delivery>,
    /// Scheduled links whose routed demand exceeded their capacity.
    pub capacity_violations: u64,
}

/// Radio network, traffic sources and routing table for one run.
///
/// Base station 0 is the eNB; the rest are gNBs.
#[derive(Debug, Clone)]
pub struct World {
    pub bss: Vec<BaseStation>,
    pub ues: Vec<UserEquipment>,
    pub flows: Vec<FlowSource>,
    routes: Vec<Option<Rat>>,
    active: Vec<bool>,
    channel: ChannelModel,
    alloc: RbgAllocation,
    scheduler: RoundRobinScheduler,
    interferers: Vec<Vec<usize>>,
    fading_rng: ChaCha8Rng,
    traffic_rng: ChaCha8Rng,
    tti_duration: f64,
    generated: u64,
    delivered: u64,
    dropped: u64,
}

impl World {
    /// Drops UEs around the gNBs, attaches each to the nearest gNB and builds
    /// the flow set for `load_bps`.
    pub fn build(
        topo: &TopologyConfig,
        traffic: &[TrafficClassSpec],
        sim: &SimulationConfig,
        load_bps: f64,
        seed: u64,
    ) -> Result<Self, TrafficError> {
        let mut rng = stream_rng(seed, Stream::Topology);
        let (mut enb_freq, mut gnb_freq) = (topo.enb.carrier_freq_hz, None);
        if topo.swap_carrier_frequencies {
            gnb_freq = Some(enb_freq);
            enb_freq = topo.gnbs[0].carrier_freq_hz;
        }
        let mut bss = vec![BaseStation::new(
            0,
            Rat::Lte,
            topo.enb.tx_power_w,
            topo.enb.bandwidth_hz,
            enb_freq,
            topo.enb.position,
            topo.enb.rbg_count,
        )];
        for (i, g) in topo.gnbs.iter().enumerate() {
            bss.push(BaseStation::new(
                i + 1,
                Rat::Nr,
                g.tx_power_w,
                g.bandwidth_hz,
                gnb_freq.unwrap_or(g.carrier_freq_hz),
                g.position,
                g.rbg_count,
            ));
        }
        let p = topo.ue_placement;
        let ues_pos: Vec<Position> = (0..topo.ue_count)
            .map(|i| {
                let centre = topo.gnbs[i % topo.gnbs.len()].position;
                let r2 = rng.random_range(p.min_radius_m.powi(2)..=p.max_radius_m.powi(2));
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let r = r2.sqrt();
                Position::new(centre.x + r * theta.cos(), centre.y + r * theta.sin())
            })
            .collect();
        let ues = ues_pos
            .iter()
            .enumerate()
            .map(|(id, pos)| {
                let nearest = bss
                    .iter()
                    .filter(|b| b.rat == Rat::Nr)
                    .min_by(|a, b| pos.distance(&a.position).total_cmp(&pos.distance(&b.position)))
                    .expect("at least one gNB")
                    .id;
                UserEquipment {
                    id,
                    position: *pos,
                    lte_bs: 0,
                    nr_bs: nearest,
                    flows: Vec::new(),
                }
            })
            .collect();
        let flows = build_traffic_mix(load_bps, traffic, topo.ue_count, sim.tti_duration_s)?;
        let params = ChannelParams {
            shadowing_sigma_db: topo.shadowing_sigma_db,
            fast_fading: topo.fast_fading,
            noise_density: topo.noise_density_w_per_hz(),
        };
        Ok(Self::from_parts(bss, ues, flows, params, sim, seed, &mut rng))
    }

    /// Assembles a world from explicit parts. Shadowing is drawn from
    /// `topology_rng`; UE flow lists are rebuilt from `flows`.
    pub fn from_parts(
        mut bss: Vec<BaseStation>,
        mut ues: Vec<UserEquipment>,
        flows: Vec<FlowSource>,
        params: ChannelParams,
        sim: &SimulationConfig,
        seed: u64,
        topology_rng: &mut ChaCha8Rng,
    ) -> Self {
        for ue in &mut ues {
            ue.flows = flows.iter().filter(|f| f.ue == ue.id).map(|f| f.id).collect();
            for b in [ue.lte_bs, ue.nr_bs] {
                bss[b].queues.insert(ue.id, PacketQueue::new(sim.queue_capacity));
            }
        }
        let channel = ChannelModel::new(&bss, &ues, params, topology_rng);
        let alloc = RbgAllocation::new(&bss);
        let interferers = bss
            .iter()
            .map(|b| bss.iter().filter(|m| m.rat == b.rat && m.id != b.id).map(|m| m.id).collect())
            .collect();
        let n = flows.len();
        Self {
            scheduler: RoundRobinScheduler::new(bss.len()),
            bss,
            ues,
            flows,
            routes: vec![None; n],
            active: vec![true; n],
            channel,
            alloc,
            interferers,
            fading_rng: stream_rng(seed, Stream::Fading),
            traffic_rng: stream_rng(seed, Stream::Traffic),
            tti_duration: sim.tti_duration_s,
            generated: 0,
            delivered: 0,
            dropped: 0,
        }
    }

    pub fn tti_duration(&self) -> f64 {
        self.tti_duration
    }

    pub fn route(&self, flow: usize) -> Option<Rat> {
        self.routes[flow]
    }

    /// Steers future arrivals of `flow`; packets already queued stay put.
    pub fn apply_action(&mut self, flow: usize, rat: Rat) {
        self.routes[flow] = Some(rat);
    }

    pub fn is_active(&self, flow: usize) -> bool {
        self.active[flow]
    }

    /// Inactive flows generate no packets and take no decisions.
    pub fn set_active(&mut self, flow: usize, active: bool) {
        self.active[flow] = active;
    }

    pub fn channel(&self) -> &ChannelRealization {
        self.channel.realization()
    }

    pub fn allocation(&self) -> &RbgAllocation {
        &self.alloc
    }

    /// BS serving `ue` on `rat`.
    pub fn serving_bs(&self, ue: usize, rat: Rat) -> usize {
        self.ues[ue].attachment(rat)
    }

    fn interferer_refs(&self, b: usize) -> Vec<&BaseStation> {
        self.interferers[b].iter().map(|&m| &self.bss[m]).collect()
    }

    /// Wide-band SINR in dB of `ue` towards its `rat` base station.
    pub fn sinr_db(&self, ue: usize, rat: Rat) -> f64 {
        let b = self.serving_bs(ue, rat);
        let lin = wideband_sinr(ue, &self.bss[b], &self.interferer_refs(b), &self.alloc, self.channel.realization());
        10.0 * lin.max(1e-30).log10()
    }

    pub fn build_state(&self, flow: usize) -> SteeringState {
        let f = &self.flows[flow];
        let mut s = SteeringState {
            class: f.class,
            sinr_db: [0.0; 2],
            queue: [0; 2],
        };
        for rat in Rat::ALL {
            s.sinr_db[rat.index()] = self.sinr_db(f.ue, rat);
            s.queue[rat.index()] = self.bss[self.serving_bs(f.ue, rat)].queued_packets();
        }
        s
    }

    /// Resamples fading for this TTI.
    pub fn advance_channel(&mut self) {
        self.channel.advance(&mut self.fading_rng);
    }

    /// Poisson arrivals for every flow. Inactive flows still consume their
    /// draws so that activation never shifts other flows' streams.
    pub fn generate(&mut self, tti: u64) -> Vec<Packet> {
        let mut out = Vec::new();
        for f in &self.flows {
            let pkts = generate_arrivals(f, tti, &mut self.traffic_rng);
            if self.active[f.id] {
                out.extend(pkts);
            }
        }
        out
    }

    /// Enqueues at the flow's routed BS. Returns false on a drop.
    pub fn enqueue(&mut self, packet: Packet) -> bool {
        let f = &self.flows[packet.flow];
        let rat = self.routes[packet.flow].expect("flow routed before its first arrival");
        let b = self.ues[f.ue].attachment(rat);
        self.generated += 1;
        let ok = self.bss[b]
            .queue_mut(f.ue)
            .expect("queue exists for attached UE")
            .enqueue(packet);
        if !ok {
            self.dropped += 1;
        }
        ok
    }

    /// Round-robin scheduling and transmission for every BS.
    pub fn transmit(&mut self, tti: u64) -> TtiOutcome {
        for b in 0..self.bss.len() {
            self.scheduler.schedule(&self.bss[b], &mut self.alloc);
        }
        let mut out = TtiOutcome::default();
        for b in 0..self.bss.len() {
            let users: Vec<usize> = self.bss[b].queues.keys().copied().collect();
            for u in users {
                if self.alloc.rbgs_of(u, b).next().is_none() {
                    continue;
                }
                let capacity = link_capacity(
                    u,
                    &self.bss[b],
                    &self.interferer_refs(b),
                    &self.alloc,
                    self.channel.realization(),
                );
                let rat = self.bss[b].rat;
                let demand: f64 = self.ues[u]
                    .flows
                    .iter()
                    .filter(|&&f| self.active[f] && self.routes[f] == Some(rat))
                    .map(|&f| self.flows[f].offered_bps(self.tti_duration))
                    .sum();
                if demand > capacity {
                    out.capacity_violations += 1;
                }
                let queue = self.bss[b].queue_mut(u).expect("scheduled UE has a queue");
                for packet in queue.transmit(capacity * self.tti_duration) {
                    self.delivered += 1;
                    out.deliveries.push(Delivery {
                        packet,
                        rat,
                        bs: b,
                        delay: crate::net::total_delay(&packet, capacity, tti, self.tti_duration),
                    });
                }
            }
        }
        out
    }

    /// Enqueue TTI of the oldest packet of `flow` buffered on `rat`.
    pub fn oldest_queued(&self, flow: usize, rat: Rat) -> Option<u64> {
        let ue = self.flows[flow].ue;
        self.bss[self.serving_bs(ue, rat)]
            .queue(ue)
            .and_then(|q| q.iter().find(|p| p.flow == flow))
            .map(|p| p.enqueue_tti)
    }

    pub fn generated(&self) -> u64 {
        self.generated
    }

    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn queued(&self) -> u64 {
        self.bss.iter().map(|b| b.queued_packets() as u64).sum()
    }

    /// generated = delivered + queued + dropped, and every queue balances.
    pub fn is_conserved(&self) -> bool {
        self.generated == self.delivered + self.queued() + self.dropped
            && self.bss.iter().all(|b| b.queues.values().all(PacketQueue::is_conserved))
    }
}
