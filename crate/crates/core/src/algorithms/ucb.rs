use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::algorithms::{argmax_lowest, Policy, Recommendation, RunningMean};
use crate::error::{Error, Result};

/// Confidence radius `sigma * sqrt(2 ln(4 N^2 / delta) / N)` after `N` pulls.
pub fn ucb_radius(pulls: u64, delta: f64, sigma: f64) -> f64 {
    let n = pulls as f64;
    sigma * (2.0 * (4.0 * n * n / delta).ln() / n).sqrt()
}

#[derive(Debug, Clone, Copy)]
struct Score {
    value: f64,
    arm: usize,
}

impl PartialEq for Score {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Score {}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    // Max-heap on value, lower arm index first on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.arm.cmp(&self.arm))
    }
}

/// Anytime UCB: pulls every arm once in index order, then the arm with the
/// largest upper confidence bound. Recommends the empirically best arm.
pub struct AnytimeUcb {
    delta: f64,
    sigma: f64,
    stats: Vec<RunningMean>,
    unpulled: usize,
    heap: BinaryHeap<Score>,
    pending: Option<usize>,
}

impl AnytimeUcb {
    pub fn new(n: usize, delta: f64, sigma: f64) -> Self {
        assert!(n >= 1, "UCB needs at least one arm");
        AnytimeUcb {
            delta,
            sigma,
            stats: vec![RunningMean::default(); n],
            unpulled: 0,
            heap: BinaryHeap::with_capacity(n),
            pending: None,
        }
    }

    pub fn pull_counts(&self) -> Vec<u64> {
        self.stats.iter().map(|s| s.count).collect()
    }

    fn score(&self, arm: usize) -> Score {
        let s = &self.stats[arm];
        Score {
            value: s.mean() + ucb_radius(s.count, self.delta, self.sigma),
            arm,
        }
    }
}

impl Policy for AnytimeUcb {
    fn n_arms(&self) -> usize {
        self.stats.len()
    }

    fn next_arm(&mut self) -> usize {
        if let Some(a) = self.pending {
            return a;
        }
        let arm = if self.unpulled < self.stats.len() {
            self.unpulled
        } else {
            self.heap.pop().expect("every arm is scored once pulled").arm
        };
        self.pending = Some(arm);
        arm
    }

    fn observe(&mut self, reward: f64) -> Result<()> {
        let arm = self
            .pending
            .take()
            .ok_or_else(|| Error::Contract("observe() called before next_arm()".into()))?;
        if arm == self.unpulled {
            self.unpulled += 1;
        }
        self.stats[arm].push(reward);
        let s = self.score(arm);
        self.heap.push(s);
        Ok(())
    }

    fn recommend(&self) -> Recommendation {
        match argmax_lowest(self.stats.iter().map(RunningMean::mean)) {
            Some((arm, mean)) => Recommendation { arm, mean },
            None => Recommendation::placeholder(0),
        }
    }
}
