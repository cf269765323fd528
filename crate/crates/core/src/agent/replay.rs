use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, N_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: [f64; N_FEATURES],
    pub action: Action,
    pub reward: f64,
    pub next_state: [f64; N_FEATURES],
    pub done: bool,
}

/// Fixed-capacity ring of transitions; once full, each push evicts the oldest.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> + '_ {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// Uniform sample with replacement into `out`. Returns `false` and leaves
    /// `out` empty while fewer than `batch` transitions are stored.
    pub fn sample_into(&self, batch: usize, rng: &mut impl Rng, out: &mut Vec<Transition>) -> bool {
        out.clear();
        if self.items.len() < batch {
            return false;
        }
        out.extend((0..batch).map(|_| self.items[rng.random_range(0..self.items.len())]));
        true
    }
}
