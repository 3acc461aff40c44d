//! Sequential Halving stage schedules.

use serde::{Deserialize, Serialize};

/// Per-stage budget allocation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Allocation {
    /// `T_l = floor(T / (|S_l| * ceil(log2 n)))`.
    #[default]
    Option1,
    /// `T_l = floor(T / (81 n) * (16/9)^(l-1) * l)`.
    Option2,
}

/// One elimination round: every survivor is pulled `pulls_per_arm` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub survivors: usize,
    pub pulls_per_arm: u64,
}

impl Stage {
    pub fn total(&self) -> u64 {
        self.survivors as u64 * self.pulls_per_arm
    }
}

/// `ceil(log2 n)` for `n >= 1`.
pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

fn option2_pulls(n: usize, budget: u64, stage: u32) -> u64 {
    // floor(T * 16^(l-1) * l / (81 * n * 9^(l-1))) in exact integer arithmetic
    // while it fits, falling back to floating point for very deep schedules.
    let exact = (|| {
        let num = (budget as u128)
            .checked_mul(16u128.checked_pow(stage - 1)?)?
            .checked_mul(stage as u128)?;
        let den = 81u128
            .checked_mul(n as u128)?
            .checked_mul(9u128.checked_pow(stage - 1)?)?;
        Some((num / den) as u64)
    })();
    exact.unwrap_or_else(|| {
        (budget as f64 / (81.0 * n as f64) * (16.0f64 / 9.0).powi(stage as i32 - 1) * stage as f64).floor()
            as u64
    })
}

/// The `ceil(log2 n)` stages SH runs with budget `budget` on `n` arms. Empty
/// for a single arm. Stages may have zero pulls when the budget is tiny.
pub fn sh_schedule(n: usize, budget: u64, allocation: Allocation) -> Vec<Stage> {
    let rounds = ceil_log2(n);
    let mut survivors = n;
    let mut out = Vec::with_capacity(rounds as usize);
    for stage in 1..=rounds {
        let pulls_per_arm = match allocation {
            Allocation::Option1 => budget / (survivors as u64 * rounds as u64),
            Allocation::Option2 => option2_pulls(n, budget, stage),
        };
        out.push(Stage {
            survivors,
            pulls_per_arm,
        });
        survivors = survivors.div_ceil(2);
    }
    out
}

pub fn schedule_total(schedule: &[Stage]) -> u64 {
    schedule.iter().map(Stage::total).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(s: &[Stage]) -> Vec<(usize, u64)> {
        s.iter().map(|st| (st.survivors, st.pulls_per_arm)).collect()
    }

    #[test]
    fn worked_examples() {
        let s1 = sh_schedule(8, 96, Allocation::Option1);
        assert_eq!(pairs(&s1), vec![(8, 4), (4, 8), (2, 16)]);
        assert_eq!(schedule_total(&s1), 96);
        let s2 = sh_schedule(8, 8100, Allocation::Option2);
        assert_eq!(pairs(&s2), vec![(8, 12), (4, 44), (2, 118)]);
        assert_eq!(schedule_total(&s2), 508);
        assert!(sh_schedule(1, 5, Allocation::Option1).is_empty());
    }

    #[test]
    fn ceil_log2_values() {
        let expect = [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (8, 3), (9, 4), (20000, 15)];
        for (n, l) in expect {
            assert_eq!(ceil_log2(n), l, "n={n}");
        }
    }

    #[test]
    fn tiny_budget_gives_zero_stages() {
        let s = sh_schedule(3, 5, Allocation::Option1);
        assert_eq!(pairs(&s), vec![(3, 0), (2, 1)]);
    }

    #[test]
    fn option2_matches_float_formula() {
        for n in [2usize, 3, 7, 64, 500] {
            for t in [1u64, 81, 1000, 123_457] {
                for (l, st) in sh_schedule(n, t, Allocation::Option2).iter().enumerate() {
                    let l = l as i32 + 1;
                    let float = t as f64 / (81.0 * n as f64) * (16.0f64 / 9.0).powi(l - 1) * l as f64;
                    assert!((st.pulls_per_arm as f64 - float.floor()).abs() <= 1.0);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn budget_and_halving_shape(n in 1usize..5000, t in 1u64..2_000_000, opt2: bool) {
            let alloc = if opt2 { Allocation::Option2 } else { Allocation::Option1 };
            let s = sh_schedule(n, t, alloc);
            prop_assert_eq!(s.len() as u32, ceil_log2(n));
            prop_assert!(schedule_total(&s) <= t);
            if let Some(first) = s.first() {
                prop_assert_eq!(first.survivors, n);
                prop_assert_eq!(s.last().unwrap().survivors.div_ceil(2), 1);
            }
            for w in s.windows(2) {
                prop_assert_eq!(w[1].survivors, w[0].survivors.div_ceil(2));
            }
        }
    }
}
