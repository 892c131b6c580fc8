//! FIFO replay memory with uniform batch sampling.

use super::Experience;
use rand::Rng;
use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct ReplayMemory {
    buffer: VecDeque<Experience>,
    capacity: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        Self {
            buffer: VecDeque::with_capacity(capacity.min(1 << 20)),
            capacity,
        }
    }

    /// Pushes one transition, evicting the oldest beyond capacity.
    pub fn push(&mut self, experience: Experience) {
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(experience);
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.buffer.iter()
    }

    /// Uniform sample without replacement within the batch. Returns `None`
    /// while the memory holds fewer than `batch_size` items (the explicit
    /// not-ready signal).
    pub fn sample(&self, batch_size: usize, rng: &mut impl Rng) -> Option<Vec<&Experience>> {
        if self.buffer.len() < batch_size || batch_size == 0 {
            return None;
        }
        let picked = rand::seq::index::sample(rng, self.buffer.len(), batch_size);
        Some(picked.iter().map(|i| &self.buffer[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{self, tag};

    fn exp(tag_value: f64) -> Experience {
        Experience {
            state: vec![tag_value],
            action: 0,
            power_dbm: 0.0,
            reward: tag_value,
            next_state: vec![tag_value],
            done: false,
        }
    }

    #[test]
    fn fifo_eviction() {
        let mut mem = ReplayMemory::new(2);
        mem.push(exp(1.0));
        mem.push(exp(2.0));
        mem.push(exp(3.0));
        assert_eq!(mem.len(), 2);
        let rewards: Vec<f64> = mem.iter().map(|e| e.reward).collect();
        assert_eq!(rewards, vec![2.0, 3.0], "oldest item must be evicted first");
    }

    #[test]
    fn full_sample_is_a_permutation() {
        let mut mem = ReplayMemory::new(8);
        for i in 0..8 {
            mem.push(exp(i as f64));
        }
        let mut rng = stream::substream(1, &[tag::REPLAY]);
        let batch = mem.sample(8, &mut rng).unwrap();
        let mut rewards: Vec<f64> = batch.iter().map(|e| e.reward).collect();
        rewards.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(rewards, (0..8).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn underfilled_memory_signals_not_ready() {
        let mut mem = ReplayMemory::new(16);
        mem.push(exp(0.0));
        let mut rng = stream::substream(2, &[tag::REPLAY]);
        assert!(mem.sample(4, &mut rng).is_none());
    }

    #[test]
    fn sampling_is_uniform_monte_carlo() {
        // Per-item inclusion frequency over 1e4 samples within 3 standard
        // errors of batch/size.
        let mut mem = ReplayMemory::new(10);
        for i in 0..10 {
            mem.push(exp(i as f64));
        }
        let batch = 4;
        let trials = 10_000;
        let mut rng = stream::substream(3, &[tag::REPLAY]);
        let mut counts = [0usize; 10];
        for _ in 0..trials {
            for e in mem.sample(batch, &mut rng).unwrap() {
                counts[e.reward as usize] += 1;
            }
        }
        let p = batch as f64 / 10.0;
        let stderr = (p * (1.0 - p) / trials as f64).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / trials as f64;
            assert!(
                (freq - p).abs() < 3.0 * stderr,
                "item {i}: inclusion {freq} vs expected {p} (3se {})",
                3.0 * stderr
            );
        }
    }

    #[test]
    fn never_exceeds_capacity() {
        let mut mem = ReplayMemory::new(5);
        for i in 0..100 {
            mem.push(exp(i as f64));
            assert!(mem.len() <= 5);
        }
        let rewards: Vec<f64> = mem.iter().map(|e| e.reward).collect();
        assert_eq!(rewards, vec![95.0, 96.0, 97.0, 98.0, 99.0]);
    }
}
