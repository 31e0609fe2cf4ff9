use std::sync::Arc;

use crate::env::{ActionEncoding, Observation};
use crate::rng::RngStream;

pub const DEFAULT_CAPACITY: usize = 3000;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Arc<Observation>,
    pub action: ActionEncoding,
    pub reward: f64,
    /// Carries the next state's legal encodings for the max over a'.
    pub next: Arc<Observation>,
    pub done: bool,
}

/// Fixed-capacity ring; the oldest transition is overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    head: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity),
            head: 0,
            inserted: 0,
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

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
        }
        self.head = (self.head + 1) % self.capacity;
        self.inserted += 1;
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.head };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// `n` transitions drawn uniformly without replacement, or `None` while
    /// the buffer holds fewer than `n`.
    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Option<Vec<&Transition>> {
        if self.items.len() < n {
            return None;
        }
        let mut idx: Vec<usize> = (0..self.items.len()).collect();
        for i in 0..n {
            let j = i + rng.index(idx.len() - i);
            idx.swap(i, j);
        }
        Some(idx[..n].iter().map(|&i| &self.items[i]).collect())
    }
}
