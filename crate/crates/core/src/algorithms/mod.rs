//! Sequential sampling policies.
//!
//! Every policy speaks the same protocol: call [`Policy::next_arm`], pull that
//! arm, hand the reward to [`Policy::observe`], repeat. [`Policy::recommend`]
//! may be called at any time.

mod bracket;
mod dsh;
mod schedule;
mod sh;
mod spec;
mod ucb;
mod uniform;

use std::cell::RefCell;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use bracket::{bracket_opens_at, brackets_open_at, Bracketing, InnerKind};
pub use dsh::{initial_block_len, DoublingSh};
pub use schedule::{ceil_log2, schedule_total, sh_schedule, Allocation, Stage};
pub use sh::SequentialHalving;
pub use spec::{PolicySpec, ShOptions};
pub use ucb::{ucb_radius, AnytimeUcb};
pub use uniform::{uniform_top_s, UniformSampling};

/// The current best-arm guess `J` and the empirical mean `M` backing it.
/// `mean == -inf` means the policy has no completed estimate yet and `arm`
/// is a placeholder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub arm: usize,
    pub mean: f64,
}

impl Recommendation {
    pub const fn placeholder(arm: usize) -> Self {
        Recommendation {
            arm,
            mean: f64::NEG_INFINITY,
        }
    }

    pub fn has_estimate(&self) -> bool {
        self.mean > f64::NEG_INFINITY
    }
}

pub trait Policy {
    fn n_arms(&self) -> usize;

    /// Arm to pull at the next time step. Repeated calls without an
    /// intervening [`observe`](Policy::observe) return the same arm.
    fn next_arm(&mut self) -> usize;

    /// Reward for the arm returned by the last `next_arm`. Calling this
    /// without a pending pull is a contract violation.
    fn observe(&mut self, reward: f64) -> Result<()>;

    /// Fixed-budget policies report `true` once their budget is spent. Anytime
    /// policies never finish.
    fn finished(&self) -> bool {
        false
    }

    fn recommend(&self) -> Recommendation;

    /// SH stages that had a per-arm allocation of zero pulls.
    fn zero_pull_stages(&self) -> u64 {
        0
    }
}

/// How ranking ties between empirical means are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    #[default]
    LowestIndex,
    SeededRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShConfig {
    pub budget: u64,
    pub allocation: Allocation,
    pub tie_break: TieBreak,
    /// Rank survivors by all their samples since the first stage rather than
    /// by the current stage only.
    pub reuse_samples: bool,
}

impl ShConfig {
    pub fn new(budget: u64) -> Self {
        ShConfig {
            budget,
            allocation: Allocation::Option1,
            tie_break: TieBreak::LowestIndex,
            reuse_samples: false,
        }
    }
}

/// Sample-reuse switches. All off by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ReuseFlags {
    /// SH ranks by cumulative samples.
    pub sh_samples: bool,
    /// Each new DSH round starts from the statistics of all earlier rounds.
    pub dsh_warm_start: bool,
    /// Brackets pool samples of the same underlying arm.
    pub bracket_sharing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunningMean {
    pub sum: f64,
    pub count: u64,
}

impl RunningMean {
    pub fn push(&mut self, x: f64) {
        self.sum += x;
        self.count += 1;
    }

    pub fn merge(&mut self, other: &RunningMean) {
        self.sum += other.sum;
        self.count += other.count;
    }

    /// `-inf` when empty, so unplayed arms rank below played ones.
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NEG_INFINITY
        } else {
            self.sum / self.count as f64
        }
    }
}

/// Per-underlying-arm statistics pooled across brackets.
pub(crate) type SharedStats = Rc<RefCell<Vec<RunningMean>>>;

/// Index of the largest value, lowest index among ties. `None` if empty.
pub(crate) fn argmax_lowest(values: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}
