//! Seeded stochastic reward environment.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::instance::{Instance, NoiseModel};
use crate::seed::{rng_from_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardSample {
    pub arm: usize,
    pub value: f64,
    /// 1-based time step at which the sample was drawn.
    pub t: u64,
}

/// One environment per trial. `total_pulls` always equals the sum of
/// `pull_counts`.
#[derive(Debug, Clone)]
pub struct Environment {
    instance: Instance,
    rng: SimRng,
    pull_counts: Vec<u64>,
    total_pulls: u64,
}

impl Environment {
    pub fn new(instance: Instance, seed: u64) -> Self {
        let n = instance.n();
        Environment {
            instance,
            rng: rng_from_seed(seed),
            pull_counts: vec![0; n],
            total_pulls: 0,
        }
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }

    pub fn pull(&mut self, arm: usize) -> Result<RewardSample> {
        let n = self.instance.n();
        if arm >= n {
            return Err(Error::ArmOutOfRange { arm, n });
        }
        let mu = self.instance.means()[arm];
        let value = match self.instance.noise() {
            NoiseModel::Gaussian { sigma } => {
                let z: f64 = self.rng.sample(StandardNormal);
                mu + sigma * z
            }
            NoiseModel::Bernoulli => {
                if self.rng.random::<f64>() < mu {
                    1.0
                } else {
                    0.0
                }
            }
        };
        self.pull_counts[arm] += 1;
        self.total_pulls += 1;
        Ok(RewardSample {
            arm,
            value,
            t: self.total_pulls,
        })
    }

    /// Zeroes the counters and reseeds the reward stream.
    pub fn reset(&mut self, seed: u64) {
        self.rng = rng_from_seed(seed);
        self.pull_counts.iter_mut().for_each(|c| *c = 0);
        self.total_pulls = 0;
    }

    pub fn pull_counts(&self) -> &[u64] {
        &self.pull_counts
    }

    pub fn total_pulls(&self) -> u64 {
        self.total_pulls
    }
}
