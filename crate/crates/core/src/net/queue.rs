use crate::traffic::TrafficClass;
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub flow: usize,
    pub class: TrafficClass,
    pub size_bits: u32,
    pub enqueue_tti: u64,
}

/// Bounded FIFO transmission buffer for one (UE, BS) pair.
///
/// Overflow drops the arriving packet. The head packet may be sent across
/// several TTIs; its partial progress is kept in `head_sent_bits`.
#[derive(Debug, Clone)]
pub struct PacketQueue {
    packets: VecDeque<Packet>,
    capacity: usize,
    head_sent_bits: f64,
    enqueued: [u64; TrafficClass::COUNT],
    dequeued: [u64; TrafficClass::COUNT],
    dropped: [u64; TrafficClass::COUNT],
    queued: [u64; TrafficClass::COUNT],
}

impl PacketQueue {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "queue capacity must be at least one packet");
        Self {
            packets: VecDeque::new(),
            capacity,
            head_sent_bits: 0.0,
            enqueued: [0; TrafficClass::COUNT],
            dequeued: [0; TrafficClass::COUNT],
            dropped: [0; TrafficClass::COUNT],
            queued: [0; TrafficClass::COUNT],
        }
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Returns false (and counts a drop) when the buffer is full.
    pub fn enqueue(&mut self, packet: Packet) -> bool {
        let k = packet.class.index();
        if self.packets.len() >= self.capacity {
            self.dropped[k] += 1;
            return false;
        }
        self.enqueued[k] += 1;
        self.queued[k] += 1;
        self.packets.push_back(packet);
        true
    }

    pub fn pop(&mut self) -> Option<Packet> {
        let p = self.packets.pop_front()?;
        self.head_sent_bits = 0.0;
        self.dequeued[p.class.index()] += 1;
        self.queued[p.class.index()] -= 1;
        Some(p)
    }

    /// Sends up to `budget_bits` in FIFO order and returns the packets whose
    /// last bit went out.
    pub fn transmit(&mut self, mut budget_bits: f64) -> Vec<Packet> {
        let mut delivered = Vec::new();
        while budget_bits > 0.0 {
            let Some(head) = self.packets.front() else {
                break;
            };
            let remaining = head.size_bits as f64 - self.head_sent_bits;
            if remaining <= budget_bits {
                budget_bits -= remaining;
                delivered.push(self.pop().expect("head exists"));
            } else {
                self.head_sent_bits += budget_bits;
                budget_bits = 0.0;
            }
        }
        delivered
    }

    /// Bits still to send, counting the partially sent head.
    pub fn backlog_bits(&self) -> f64 {
        self.packets.iter().map(|p| p.size_bits as f64).sum::<f64>() - self.head_sent_bits
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.packets.iter()
    }

    pub fn enqueued(&self, class: TrafficClass) -> u64 {
        self.enqueued[class.index()]
    }

    pub fn dequeued(&self, class: TrafficClass) -> u64 {
        self.dequeued[class.index()]
    }

    pub fn dropped(&self, class: TrafficClass) -> u64 {
        self.dropped[class.index()]
    }

    pub fn queued(&self, class: TrafficClass) -> u64 {
        self.queued[class.index()]
    }

    pub fn total_dropped(&self) -> u64 {
        self.dropped.iter().sum()
    }

    /// enqueued − dequeued = queued for every class, and the class counts add
    /// up to the buffer length.
    pub fn is_conserved(&self) -> bool {
        let mut actual = [0u64; TrafficClass::COUNT];
        for p in &self.packets {
            actual[p.class.index()] += 1;
        }
        TrafficClass::ALL.iter().all(|c| {
            let k = c.index();
            self.enqueued[k] - self.dequeued[k] == self.queued[k] && self.queued[k] == actual[k]
        })
    }
}
