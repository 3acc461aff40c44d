use crate::algorithms::{argmax_lowest, Policy, Recommendation, RunningMean};
use crate::env::Environment;
use crate::error::{Error, Result};

/// Round-robin over all arms; recommends the best running mean.
pub struct UniformSampling {
    stats: Vec<RunningMean>,
    cursor: usize,
    pending: Option<usize>,
}

impl UniformSampling {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "uniform sampling needs at least one arm");
        UniformSampling {
            stats: vec![RunningMean::default(); n],
            cursor: 0,
            pending: None,
        }
    }
}

impl Policy for UniformSampling {
    fn n_arms(&self) -> usize {
        self.stats.len()
    }

    fn next_arm(&mut self) -> usize {
        *self.pending.get_or_insert(self.cursor)
    }

    fn observe(&mut self, reward: f64) -> Result<()> {
        let arm = self
            .pending
            .take()
            .ok_or_else(|| Error::Contract("observe() called before next_arm()".into()))?;
        self.stats[arm].push(reward);
        self.cursor = (self.cursor + 1) % self.stats.len();
        Ok(())
    }

    fn recommend(&self) -> Recommendation {
        let (arm, mean) = argmax_lowest(self.stats.iter().map(RunningMean::mean)).expect("n >= 1");
        Recommendation { arm, mean }
    }
}

/// Pulls every arm `budget / n` times and returns the `s` arms with the
/// largest sample means, best first (lowest index on ties).
pub fn uniform_top_s(env: &mut Environment, budget: u64, s: usize) -> Result<Vec<usize>> {
    let n = env.n();
    if s > n {
        return Err(Error::InvalidArgument(format!("s = {s} exceeds the number of arms {n}")));
    }
    if budget < n as u64 {
        return Err(Error::InvalidArgument(format!("budget {budget} is smaller than n = {n}")));
    }
    let per_arm = budget / n as u64;
    let mut means = Vec::with_capacity(n);
    for arm in 0..n {
        let mut m = RunningMean::default();
        for _ in 0..per_arm {
            m.push(env.pull(arm)?.value);
        }
        means.push((m.mean(), arm));
    }
    means.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(means.into_iter().take(s).map(|(_, a)| a).collect())
}
