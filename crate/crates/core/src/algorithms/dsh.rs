use crate::algorithms::{
    Policy, Recommendation, RunningMean, SequentialHalving, SharedStats, ShConfig,
};
use crate::error::{Error, Result};
use crate::seed::splitmix64;

/// `ceil(n log2 n)`, the length of the first doubling block.
pub fn initial_block_len(n: usize) -> u64 {
    if n <= 1 {
        return 0;
    }
    if n.is_power_of_two() {
        return n as u64 * n.trailing_zeros() as u64;
    }
    (n as f64 * (n as f64).log2()).ceil() as u64
}

#[derive(Debug, Clone, Copy)]
enum Pending {
    Inner(usize),
    Idle(usize),
}

/// Sequential Halving made anytime by the doubling trick.
///
/// Block `k` lasts `T_1 * 2^(k-1)` steps and runs a fresh SH with that budget.
/// The recommendation only changes at block boundaries, where it is replaced
/// by the output of the SH that just finished. Steps of a block left over
/// after its SH completes pull the current recommendation.
pub struct DoublingSh {
    n: usize,
    template: ShConfig,
    warm_start: bool,
    seed: u64,
    shared: Option<(SharedStats, Vec<usize>)>,
    t1: u64,
    block: u32,
    block_len: u64,
    step_in_block: u64,
    inner: Option<SequentialHalving>,
    history: Vec<RunningMean>,
    current: Recommendation,
    current_budget: u64,
    pending: Option<Pending>,
    zero_stages: u64,
}

impl DoublingSh {
    /// `template` supplies allocation, tie-break and reuse; its budget is
    /// ignored. With `warm_start`, each SH round starts from the statistics of
    /// every earlier pull.
    pub fn new(n: usize, template: ShConfig, warm_start: bool, seed: u64) -> Self {
        Self::build(n, template, warm_start, seed, None)
    }

    /// Rounds rank by `shared[slot_arms[slot]]`. The caller updates `shared`.
    pub(crate) fn new_shared(
        n: usize,
        template: ShConfig,
        warm_start: bool,
        seed: u64,
        shared: SharedStats,
        slot_arms: Vec<usize>,
    ) -> Self {
        assert_eq!(slot_arms.len(), n);
        Self::build(n, template, warm_start, seed, Some((shared, slot_arms)))
    }

    fn build(
        n: usize,
        template: ShConfig,
        warm_start: bool,
        seed: u64,
        shared: Option<(SharedStats, Vec<usize>)>,
    ) -> Self {
        assert!(n >= 1, "doubling SH needs at least one arm");
        let t1 = initial_block_len(n);
        let mut dsh = DoublingSh {
            n,
            template,
            warm_start,
            seed,
            shared,
            t1,
            block: 0,
            block_len: 0,
            step_in_block: 0,
            inner: None,
            history: vec![RunningMean::default(); n],
            current: Recommendation::placeholder(0),
            current_budget: 0,
            pending: None,
            zero_stages: 0,
        };
        if n > 1 {
            dsh.start_block();
        }
        dsh
    }

    /// 1-based index of the block in progress.
    pub fn block(&self) -> u32 {
        self.block
    }

    pub fn block_len(&self) -> u64 {
        self.block_len
    }

    /// Budget of the SH whose output is the current recommendation, 0 if none.
    pub fn current_budget(&self) -> u64 {
        self.current_budget
    }

    fn start_block(&mut self) {
        self.block += 1;
        self.block_len = self.t1 << (self.block - 1);
        self.step_in_block = 0;
        let mut cfg = self.template;
        cfg.budget = self.block_len;
        let seed = splitmix64(self.seed ^ splitmix64(self.block as u64));
        let mut sh = SequentialHalving::new(self.n, cfg, seed);
        if self.warm_start {
            sh = sh.with_prior(&self.history);
        }
        if let Some((stats, arms)) = &self.shared {
            sh = sh.with_shared(stats.clone(), arms.clone());
        }
        self.zero_stages += sh.zero_pull_stages();
        self.inner = Some(sh);
    }

    fn end_block(&mut self) {
        let sh = self.inner.take().expect("block in progress");
        self.current = sh.recommend();
        self.current_budget = self.block_len;
        self.start_block();
    }
}

impl Policy for DoublingSh {
    fn n_arms(&self) -> usize {
        self.n
    }

    fn next_arm(&mut self) -> usize {
        match self.pending {
            Some(Pending::Inner(a)) | Some(Pending::Idle(a)) => return a,
            None => {}
        }
        let p = match self.inner.as_mut() {
            Some(sh) if !sh.finished() => Pending::Inner(sh.next_arm()),
            _ => Pending::Idle(self.current.arm),
        };
        self.pending = Some(p);
        match p {
            Pending::Inner(a) | Pending::Idle(a) => a,
        }
    }

    fn observe(&mut self, reward: f64) -> Result<()> {
        let p = self
            .pending
            .take()
            .ok_or_else(|| Error::Contract("observe() called before next_arm()".into()))?;
        let slot = match p {
            Pending::Inner(a) => {
                self.inner.as_mut().expect("block in progress").observe(reward)?;
                a
            }
            Pending::Idle(a) => a,
        };
        self.history[slot].push(reward);
        if self.n == 1 {
            self.current = Recommendation {
                arm: 0,
                mean: self.history[0].mean(),
            };
            return Ok(());
        }
        self.step_in_block += 1;
        if self.step_in_block == self.block_len {
            self.end_block();
        }
        Ok(())
    }

    fn recommend(&self) -> Recommendation {
        self.current
    }

    fn zero_pull_stages(&self) -> u64 {
        self.zero_stages
    }
}
