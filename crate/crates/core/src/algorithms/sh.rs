use rand::Rng;

use crate::algorithms::{
    sh_schedule, Policy, Recommendation, RunningMean, SharedStats, ShConfig, Stage, TieBreak,
};
use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, SimRng};

/// Sequential Halving over `n` slots with a fixed budget.
///
/// Within a stage the survivors are pulled round-robin. After the last stage
/// the policy is finished; further pulls go to the recommended slot and their
/// rewards are discarded (except for a single slot, where they feed its
/// running mean).
pub struct SequentialHalving {
    n: usize,
    config: ShConfig,
    schedule: Vec<Stage>,
    stage: usize,
    survivors: Vec<usize>,
    pulls_in_stage: u64,
    stage_stats: Vec<RunningMean>,
    cumulative: Vec<RunningMean>,
    shared: Option<(SharedStats, Vec<usize>)>,
    pending: Option<usize>,
    result: Option<Recommendation>,
    single: RunningMean,
    rng: SimRng,
    zero_stages: u64,
}

impl SequentialHalving {
    pub fn new(n: usize, config: ShConfig, seed: u64) -> Self {
        assert!(n >= 1, "sequential halving needs at least one arm");
        let schedule = sh_schedule(n, config.budget, config.allocation);
        let mut sh = SequentialHalving {
            n,
            config,
            schedule,
            stage: 0,
            survivors: (0..n).collect(),
            pulls_in_stage: 0,
            stage_stats: vec![RunningMean::default(); n],
            cumulative: vec![RunningMean::default(); n],
            shared: None,
            pending: None,
            result: None,
            single: RunningMean::default(),
            rng: rng_from_seed(seed),
            zero_stages: 0,
        };
        sh.advance();
        sh
    }

    /// Starts the cumulative statistics from `prior` instead of zero. Only
    /// affects ranking when `reuse_samples` is on.
    pub fn with_prior(mut self, prior: &[RunningMean]) -> Self {
        assert_eq!(prior.len(), self.n);
        self.cumulative.copy_from_slice(prior);
        if self.n == 1 {
            self.single = prior[0];
        }
        self
    }

    /// Ranks by statistics pooled per underlying arm (`slot_arms[slot]`)
    /// instead of the policy's own. The owner of `shared` updates it.
    pub(crate) fn with_shared(mut self, shared: SharedStats, slot_arms: Vec<usize>) -> Self {
        assert_eq!(slot_arms.len(), self.n);
        self.shared = Some((shared, slot_arms));
        self
    }

    pub fn schedule(&self) -> &[Stage] {
        &self.schedule
    }

    pub fn budget(&self) -> u64 {
        self.config.budget
    }

    pub fn survivors(&self) -> &[usize] {
        &self.survivors
    }

    fn rank_stat(&self, slot: usize) -> f64 {
        match &self.shared {
            Some((shared, arms)) => shared.borrow()[arms[slot]].mean(),
            None if self.config.reuse_samples => self.cumulative[slot].mean(),
            None => self.stage_stats[slot].mean(),
        }
    }

    /// Moves through completed (or empty) stages until one with pulls left,
    /// or until a single survivor remains.
    fn advance(&mut self) {
        if self.result.is_some() {
            return;
        }
        if self.schedule.is_empty() {
            self.result = Some(Recommendation {
                arm: 0,
                mean: self.single.mean(),
            });
            return;
        }
        while self.stage < self.schedule.len() {
            let st = self.schedule[self.stage];
            if self.pulls_in_stage < st.total() {
                return;
            }
            if st.pulls_per_arm == 0 {
                self.zero_stages += 1;
            }
            self.eliminate();
        }
    }

    fn eliminate(&mut self) {
        let keep = self.survivors.len().div_ceil(2);
        let mut ranked: Vec<(f64, u64, usize)> = Vec::with_capacity(self.survivors.len());
        for &slot in &self.survivors {
            let key = match self.config.tie_break {
                TieBreak::LowestIndex => slot as u64,
                TieBreak::SeededRandom => self.rng.random(),
            };
            ranked.push((self.rank_stat(slot), key, slot));
        }
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        ranked.truncate(keep);
        self.survivors = ranked.iter().map(|r| r.2).collect();
        let winner_stat = ranked[0].0;

        for slot in 0..self.n {
            self.stage_stats[slot] = RunningMean::default();
        }
        self.pulls_in_stage = 0;
        self.stage += 1;
        if self.stage == self.schedule.len() {
            debug_assert_eq!(self.survivors.len(), 1);
            self.result = Some(Recommendation {
                arm: self.survivors[0],
                mean: winner_stat,
            });
        }
    }
}

impl Policy for SequentialHalving {
    fn n_arms(&self) -> usize {
        self.n
    }

    fn next_arm(&mut self) -> usize {
        if let Some(arm) = self.pending {
            return arm;
        }
        let arm = match self.result {
            Some(rec) => rec.arm,
            None => {
                let k = self.survivors.len() as u64;
                self.survivors[(self.pulls_in_stage % k) as usize]
            }
        };
        self.pending = Some(arm);
        arm
    }

    fn observe(&mut self, reward: f64) -> Result<()> {
        let slot = self
            .pending
            .take()
            .ok_or_else(|| Error::Contract("observe() called before next_arm()".into()))?;
        if self.result.is_some() {
            if self.n == 1 {
                self.single.push(reward);
                self.result = Some(Recommendation {
                    arm: 0,
                    mean: self.single.mean(),
                });
            }
            return Ok(());
        }
        self.stage_stats[slot].push(reward);
        self.cumulative[slot].push(reward);
        self.pulls_in_stage += 1;
        self.advance();
        Ok(())
    }

    fn finished(&self) -> bool {
        self.result.is_some()
    }

    fn recommend(&self) -> Recommendation {
        self.result.unwrap_or(Recommendation::placeholder(0))
    }

    fn zero_pull_stages(&self) -> u64 {
        self.zero_stages
    }
}
