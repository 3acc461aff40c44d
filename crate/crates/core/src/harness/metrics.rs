use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::TrialTrajectory;
use crate::instance::is_eps_good;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Fixed-point scale for exact, order-independent regret sums.
const SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64

fn to_fixed(x: f64) -> u128 {
    (x * SCALE).round() as u128
}

/// Sufficient statistics of all trials at one checkpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointStats {
    pub t: u64,
    pub trials: u64,
    /// `sum regret * 2^64`, rounded per trial.
    pub regret_sum: u128,
    /// `sum regret^2 * 2^64`, rounded per trial.
    pub regret_sq_sum: u128,
    /// Trials whose recommendation was not `eps`-good, one count per
    /// configured epsilon.
    pub failures: Vec<u64>,
}

impl PointStats {
    fn empty(t: u64, n_eps: usize) -> Self {
        PointStats {
            t,
            trials: 0,
            regret_sum: 0,
            regret_sq_sum: 0,
            failures: vec![0; n_eps],
        }
    }

    fn push(&mut self, regret: f64, epsilons: &[f64]) {
        self.trials += 1;
        self.regret_sum += to_fixed(regret);
        self.regret_sq_sum += to_fixed(regret * regret);
        for (f, &e) in self.failures.iter_mut().zip(epsilons) {
            *f += !is_eps_good(regret, e) as u64;
        }
    }

    fn merge(&mut self, other: &PointStats) {
        self.trials += other.trials;
        self.regret_sum += other.regret_sum;
        self.regret_sq_sum += other.regret_sq_sum;
        for (a, b) in self.failures.iter_mut().zip(&other.failures) {
            *a += b;
        }
    }

    pub fn mean_regret(&self) -> f64 {
        self.regret_sum as f64 / SCALE / self.trials as f64
    }

    /// Standard error of the mean regret; 0 for a single trial.
    pub fn std_err(&self) -> f64 {
        if self.trials < 2 {
            return 0.0;
        }
        let n = self.trials as f64;
        let mean = self.mean_regret();
        let var = ((self.regret_sq_sum as f64 / SCALE - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub points: Vec<PointStats>,
}

/// Cross-trial aggregates for every policy of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub config_hash: String,
    pub epsilons: Vec<f64>,
    pub policies: Vec<PolicySummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub t: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretPoint {
    pub t: u64,
    pub mean: f64,
    pub std_err: f64,
    pub trials: u64,
}

/// 95% Wilson score interval for `failures` out of `trials`.
pub fn wilson_interval(failures: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if failures == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if failures == trials { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

impl MetricsSummary {
    pub fn new(config_hash: impl Into<String>, epsilons: Vec<f64>) -> Self {
        MetricsSummary {
            config_hash: config_hash.into(),
            epsilons,
            policies: Vec::new(),
        }
    }

    /// Adds one policy's trajectories, in the given order.
    pub fn add_policy(&mut self, label: &str, trajectories: &[TrialTrajectory]) {
        let mut points: Vec<PointStats> = Vec::new();
        for traj in trajectories {
            for (i, rec) in traj.records.iter().enumerate() {
                if points.len() <= i {
                    points.push(PointStats::empty(rec.t, self.epsilons.len()));
                }
                debug_assert_eq!(points[i].t, rec.t);
                points[i].push(rec.regret, &self.epsilons);
            }
        }
        self.policies.push(PolicySummary {
            policy: label.to_string(),
            points,
        });
    }

    pub fn policy(&self, label: &str) -> Result<&PolicySummary> {
        self.policies
            .iter()
            .find(|p| p.policy == label)
            .ok_or_else(|| Error::InvalidArgument(format!("no policy `{label}` in summary")))
    }

    fn eps_index(&self, eps: f64) -> Result<usize> {
        self.epsilons
            .iter()
            .position(|&e| (e - eps).abs() <= 1e-12)
            .ok_or(Error::UnknownEpsilon(eps))
    }

    pub fn regret_curve(&self, label: &str) -> Result<Vec<RegretPoint>> {
        Ok(self
            .policy(label)?
            .points
            .iter()
            .map(|p| RegretPoint {
                t: p.t,
                mean: p.mean_regret(),
                std_err: p.std_err(),
                trials: p.trials,
            })
            .collect())
    }

    /// Error probability with Wilson interval at every checkpoint.
    pub fn eps_error_curve(&self, label: &str, eps: f64) -> Result<Vec<ErrorPoint>> {
        let k = self.eps_index(eps)?;
        Ok(self
            .policy(label)?
            .points
            .iter()
            .map(|p| {
                let (ci_low, ci_high) = wilson_interval(p.failures[k], p.trials);
                ErrorPoint {
                    t: p.t,
                    estimate: p.failures[k] as f64 / p.trials as f64,
                    ci_low,
                    ci_high,
                    trials: p.trials,
                }
            })
            .collect())
    }

    /// Adds the trials of `other`. Both must come from the same configuration.
    pub fn merge(&mut self, other: &MetricsSummary) -> Result<()> {
        if self.config_hash != other.config_hash {
            return Err(Error::SchemaMismatch(format!(
                "config hash {} differs from {}",
                other.config_hash, self.config_hash
            )));
        }
        self.merge_unchecked(other)
    }

    /// Like [`merge`](Self::merge) without the config-hash guard. Policies,
    /// checkpoints and epsilons must still line up.
    pub fn merge_unchecked(&mut self, other: &MetricsSummary) -> Result<()> {
        if self.epsilons != other.epsilons {
            return Err(Error::SchemaMismatch("epsilon lists differ".into()));
        }
        let mut merged = self.policies.clone();
        for theirs in &other.policies {
            match merged.iter_mut().find(|p| p.policy == theirs.policy) {
                None => merged.push(theirs.clone()),
                Some(ours) => {
                    let same_times = ours.points.len() == theirs.points.len()
                        && ours.points.iter().zip(&theirs.points).all(|(a, b)| a.t == b.t);
                    if !same_times {
                        return Err(Error::SchemaMismatch(format!(
                            "checkpoints differ for policy `{}`",
                            ours.policy
                        )));
                    }
                    for (a, b) in ours.points.iter_mut().zip(&theirs.points) {
                        a.merge(b);
                    }
                }
            }
        }
        self.policies = merged;
        Ok(())
    }
}

/// Smallest checkpoint from which the estimated error stays at or below
/// `delta` for the rest of the curve.
pub fn sample_complexity_estimate(curve: &[ErrorPoint], delta: f64) -> Option<u64> {
    let mut answer = None;
    for p in curve.iter().rev() {
        if p.estimate <= delta {
            answer = Some(p.t);
        } else {
            break;
        }
    }
    answer
}
