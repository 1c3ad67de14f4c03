//! Seeded latency model for the node ↔ LMU link.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::Message;

/// Observed end-to-end delay of the prototype link, seconds.
pub const DEFAULT_MIN_DELAY: f64 = 7.0;
pub const DEFAULT_MAX_DELAY: f64 = 9.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error("delays must satisfy 0 <= min ({min}) <= max ({max})")]
    BadRange { min: f64, max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub min_delay: f64,
    pub max_delay: f64,
    pub seed: u64,
}

impl LinkModel {
    pub fn new(min_delay: f64, max_delay: f64, seed: u64) -> Result<Self, LinkError> {
        if !(min_delay.is_finite() && max_delay.is_finite() && 0.0 <= min_delay && min_delay <= max_delay) {
            return Err(LinkError::BadRange {
                min: min_delay,
                max: max_delay,
            });
        }
        Ok(Self {
            min_delay,
            max_delay,
            seed,
        })
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

impl Default for LinkModel {
    fn default() -> Self {
        Self {
            min_delay: DEFAULT_MIN_DELAY,
            max_delay: DEFAULT_MAX_DELAY,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Node to LMU.
    Up,
    /// LMU to node.
    Down,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "UP",
            Direction::Down => "DOWN",
        }
    }
}

/// A message in flight.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub sent_at: f64,
    pub deliver_at: f64,
    pub direction: Direction,
    pub message: Message,
    seq: u64,
}

impl Delivery {
    pub fn seq(&self) -> u64 {
        self.seq
    }
}

/// Lossless link that delays each message by a uniform draw from
/// `[min_delay, max_delay]`. The same seed and send sequence always give the
/// same delivery times.
#[derive(Debug, Clone)]
pub struct Link {
    model: LinkModel,
    rng: ChaCha8Rng,
    next_seq: u64,
}

impl Link {
    pub fn new(model: LinkModel) -> Self {
        Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            next_seq: 0,
        }
    }

    pub fn model(&self) -> &LinkModel {
        &self.model
    }

    pub fn sample_delay(&mut self) -> f64 {
        if self.model.min_delay == self.model.max_delay {
            self.model.min_delay
        } else {
            self.rng.random_range(self.model.min_delay..=self.model.max_delay)
        }
    }

    pub fn send(&mut self, message: Message, at: f64, direction: Direction) -> Delivery {
        let delay = self.sample_delay();
        let seq = self.next_seq;
        self.next_seq += 1;
        Delivery {
            sent_at: at,
            deliver_at: at + delay,
            direction,
            message,
            seq,
        }
    }
}

struct Pending(Delivery);

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl Ord for Pending {
    // Reversed: BinaryHeap is a max-heap and we want the earliest delivery,
    // ties in send order.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .deliver_at
            .total_cmp(&self.0.deliver_at)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Messages in flight, ordered by delivery time then send order.
#[derive(Default)]
pub struct InFlight {
    heap: BinaryHeap<Pending>,
}

impl InFlight {
    pub fn push(&mut self, d: Delivery) {
        self.heap.push(Pending(d));
    }

    /// Removes the next delivery due at or before `until`.
    pub fn pop_due(&mut self, until: f64) -> Option<Delivery> {
        if self.heap.peek().is_some_and(|p| p.0.deliver_at <= until) {
            self.heap.pop().map(|p| p.0)
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::LoadId;
    use crate::protocol::{Command, Relay};

    fn msg(t: f64) -> Message {
        Message::Command(Command {
            node_id: LoadId::new("n1").unwrap(),
            action: Relay::On,
            issued_at: t,
        })
    }

    #[test]
    fn degenerate_range_is_exact() {
        let mut link = Link::new(LinkModel::new(8.0, 8.0, 3).unwrap());
        let d = link.send(msg(100.0), 100.0, Direction::Down);
        assert_eq!(d.deliver_at, 108.0);
    }

    #[test]
    fn same_seed_same_delays() {
        let model = LinkModel::default().with_seed(42);
        let mut a = Link::new(model);
        let mut b = Link::new(model);
        let da: Vec<f64> = (0..100).map(|_| a.sample_delay()).collect();
        let db: Vec<f64> = (0..100).map(|_| b.sample_delay()).collect();
        assert_eq!(da, db);
        let mut c = Link::new(model.with_seed(43));
        let dc: Vec<f64> = (0..100).map(|_| c.sample_delay()).collect();
        assert_ne!(da, dc);
    }

    #[test]
    fn bad_ranges_rejected() {
        assert!(LinkModel::new(9.0, 7.0, 0).is_err());
        assert!(LinkModel::new(-1.0, 7.0, 0).is_err());
        assert!(LinkModel::new(0.0, f64::INFINITY, 0).is_err());
    }

    #[test]
    fn in_flight_orders_by_time_then_send_order() {
        let mut link = Link::new(LinkModel::new(5.0, 5.0, 0).unwrap());
        let mut q = InFlight::default();
        q.push(link.send(msg(1.0), 10.0, Direction::Up));
        q.push(link.send(msg(2.0), 0.0, Direction::Up));
        q.push(link.send(msg(3.0), 10.0, Direction::Up));
        assert!(q.pop_due(4.9).is_none());
        let order: Vec<u64> = std::iter::from_fn(|| q.pop_due(100.0)).map(|d| d.seq()).collect();
        assert_eq!(order, vec![1, 0, 2]);
    }
}
