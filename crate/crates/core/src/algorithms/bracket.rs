use std::cell::RefCell;
use std::rc::Rc;

use rand::Rng;

use crate::algorithms::{
    AnytimeUcb, DoublingSh, Policy, Recommendation, RunningMean, SharedStats, ShConfig,
};
use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, splitmix64, SimRng};

/// Step at which the `b`-th bracket (1-based) opens: the first `t >= 1` with
/// `t >= (b-1) 2^(b-1)`.
pub fn bracket_opens_at(b: u32) -> u64 {
    assert!(b >= 1);
    ((b as u64 - 1) << (b - 1)).max(1)
}

/// Number of brackets opened by step `t`: `max{B : t >= (B-1) 2^(B-1)}`.
pub fn brackets_open_at(t: u64) -> u32 {
    let mut b = 0u32;
    while b < 63 && t >= bracket_opens_at(b + 1) {
        b += 1;
    }
    b
}

/// Base algorithm run on each bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerKind {
    Dsh { template: ShConfig, warm_start: bool },
    Ucb { delta: f64, sigma: f64 },
}

struct Bracket {
    slots: Vec<usize>,
    inner: Box<dyn Policy>,
    pulls: u64,
}

/// Opens brackets of doubling size over time and shares steps between them
/// round-robin. Bracket `b` holds `min(2^b, n)` arms drawn with replacement,
/// or every arm once `2^b >= n`. The recommendation is the representative of
/// the bracket reporting the largest empirical mean.
pub struct Bracketing {
    n: usize,
    kind: InnerKind,
    seed: u64,
    rng: SimRng,
    shared: Option<SharedStats>,
    brackets: Vec<Bracket>,
    cursor: usize,
    pulls: u64,
    pending: Option<usize>,
}

impl Bracketing {
    /// With `share`, DSH brackets rank arms by samples pooled across all
    /// brackets holding the same arm. Ignored for UCB brackets.
    pub fn new(n: usize, kind: InnerKind, share: bool, seed: u64) -> Self {
        assert!(n >= 1, "bracketing needs at least one arm");
        let share = share && matches!(kind, InnerKind::Dsh { .. });
        Bracketing {
            n,
            kind,
            seed,
            rng: rng_from_seed(seed),
            shared: share.then(|| Rc::new(RefCell::new(vec![RunningMean::default(); n]))),
            brackets: Vec::new(),
            cursor: 0,
            pulls: 0,
            pending: None,
        }
    }

    pub fn open_brackets(&self) -> usize {
        self.brackets.len()
    }

    pub fn bracket_slots(&self, b: usize) -> &[usize] {
        &self.brackets[b].slots
    }

    /// Pulls received so far by each bracket, in opening order.
    pub fn bracket_pulls(&self) -> Vec<u64> {
        self.brackets.iter().map(|b| b.pulls).collect()
    }

    fn open(&mut self) {
        let b = self.brackets.len() as u32 + 1;
        let full = b >= usize::BITS || (1usize << b) >= self.n;
        let slots: Vec<usize> = if full {
            (0..self.n).collect()
        } else {
            (0..1usize << b).map(|_| self.rng.random_range(0..self.n)).collect()
        };
        let k = slots.len();
        let seed = splitmix64(self.seed ^ splitmix64(0xB0 + b as u64));
        let inner: Box<dyn Policy> = match self.kind {
            InnerKind::Dsh { template, warm_start } => match &self.shared {
                Some(stats) => Box::new(DoublingSh::new_shared(
                    k,
                    template,
                    warm_start,
                    seed,
                    stats.clone(),
                    slots.clone(),
                )),
                None => Box::new(DoublingSh::new(k, template, warm_start, seed)),
            },
            InnerKind::Ucb { delta, sigma } => Box::new(AnytimeUcb::new(k, delta, sigma)),
        };
        self.brackets.push(Bracket { slots, inner, pulls: 0 });
    }
}

impl Policy for Bracketing {
    fn n_arms(&self) -> usize {
        self.n
    }

    fn next_arm(&mut self) -> usize {
        if let Some(a) = self.pending {
            return a;
        }
        let t = self.pulls + 1;
        let b = self.brackets.len() as u32;
        if b < 63 && t >= ((b as u64) << b) {
            self.open();
        }
        let br = &mut self.brackets[self.cursor];
        let arm = br.slots[br.inner.next_arm()];
        self.pending = Some(arm);
        arm
    }

    fn observe(&mut self, reward: f64) -> Result<()> {
        let arm = self
            .pending
            .take()
            .ok_or_else(|| Error::Contract("observe() called before next_arm()".into()))?;
        let br = &mut self.brackets[self.cursor];
        br.inner.observe(reward)?;
        br.pulls += 1;
        if let Some(stats) = &self.shared {
            stats.borrow_mut()[arm].push(reward);
        }
        self.pulls += 1;
        self.cursor = if self.cursor + 1 < self.brackets.len() {
            self.cursor + 1
        } else {
            0
        };
        Ok(())
    }

    fn recommend(&self) -> Recommendation {
        let mut best: Option<(usize, Recommendation)> = None;
        for (i, br) in self.brackets.iter().enumerate() {
            let rec = br.inner.recommend();
            match best {
                Some((_, b)) if rec.mean <= b.mean => {}
                _ => best = Some((i, rec)),
            }
        }
        match best {
            Some((i, rec)) => Recommendation {
                arm: self.brackets[i].slots[rec.arm],
                mean: rec.mean,
            },
            None => Recommendation::placeholder(0),
        }
    }

    fn zero_pull_stages(&self) -> u64 {
        self.brackets.iter().map(|b| b.inner.zero_pull_stages()).sum()
    }
}
