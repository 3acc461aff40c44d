//! Seeded Monte-Carlo experiments.
//!
//! Every trial derives its permutation, reward, policy and (for random
//! instances) mean streams from `(master seed, trial index)`, so a summary
//! is bit-identical for any worker count.

mod config;
mod export;
mod metrics;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{Policy, PolicySpec};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::instance::{make_uniform_random, permute, Instance, Permutation};
use crate::seed::{derive_rng, derive_seed, Purpose};

pub use config::{Checkpoints, ExperimentConfig, InstanceSpec};
pub use export::{read_summary_json, write_summary_csv, write_summary_json, CSV_HEADER};
pub use metrics::{
    sample_complexity_estimate, wilson_interval, ErrorPoint, MetricsSummary, PointStats, PolicySummary,
    RegretPoint, Z95,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub t: u64,
    /// Arm pulled at step `t`, in original (unpermuted) indexing.
    pub pulled: usize,
    /// Recommendation after step `t`, in original indexing.
    pub recommended: usize,
    /// Gap of the recommended arm.
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTrajectory {
    pub policy: String,
    pub trial: u64,
    /// Reward-stream seed of this trial.
    pub seed: u64,
    pub records: Vec<CheckpointRecord>,
    pub zero_pull_stages: u64,
}

/// A validated configuration with its instance loaded.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    checkpoints: Vec<u64>,
    base: Instance,
}

impl Experiment {
    /// Relative instance paths resolve against `base_dir` (the current
    /// directory when `None`).
    pub fn new(config: ExperimentConfig, base_dir: Option<&Path>) -> Result<Self> {
        let checkpoints = config.validate()?;
        let dir = base_dir.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        let seed = derive_seed(config.master_seed(), u64::MAX, Purpose::Instance);
        let mut base = config::load_instance(&config.instance, &dir, seed)?;
        if let Some(noise) = config.noise {
            base = base.with_noise(noise)?;
        }
        Ok(Experiment {
            config,
            checkpoints,
            base,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    /// The experiment-level instance before any per-trial permutation.
    pub fn instance(&self) -> &Instance {
        &self.base
    }

    fn trial_instance(&self, trial: u64) -> Result<Instance> {
        if let InstanceSpec::UniformRandom {
            n,
            low,
            high,
            per_trial: true,
        } = self.config.instance
        {
            let mut rng = derive_rng(self.config.master_seed(), trial, Purpose::Instance);
            let inst = make_uniform_random(n, low, high, &mut rng)?;
            return inst.with_noise(self.base.noise());
        }
        Ok(self.base.clone())
    }

    /// Runs one policy for one trial up to the horizon.
    pub fn run_trial(&self, spec: &PolicySpec, trial: u64) -> Result<TrialTrajectory> {
        let master = self.config.master_seed();
        let instance = self.trial_instance(trial)?;
        let (instance, perm) = if self.config.permute {
            permute(&instance, derive_seed(master, trial, Purpose::Permutation))
        } else {
            let n = instance.n();
            (instance, Permutation::identity(n))
        };
        let reward_seed = derive_seed(master, trial, Purpose::Rewards);
        let n = instance.n();
        let mut env = Environment::new(instance, reward_seed);
        let horizon = self.config.horizon;
        let mut policy = spec.build(n, horizon, self.config.reuse, derive_seed(master, trial, Purpose::Policy));

        // A fixed-budget policy reports once, at the end of its budget.
        let fixed_budget = match spec {
            PolicySpec::Sh { budget, .. } => Some(budget.unwrap_or(horizon)),
            _ => None,
        };
        let times: Vec<u64> = match fixed_budget {
            Some(b) => vec![b],
            None => self.checkpoints.clone(),
        };
        let last = *times.last().expect("nonempty checkpoints");

        let mut records = Vec::with_capacity(times.len());
        let mut next = times.iter().peekable();
        for t in 1..=last {
            let arm = step(policy.as_mut(), &mut env).map_err(|e| annotate(e, spec, trial, t))?;
            if next.peek() == Some(&&t) {
                next.next();
                let rec = policy.recommend();
                records.push(CheckpointRecord {
                    t,
                    pulled: perm.original_index(arm),
                    recommended: perm.original_index(rec.arm),
                    regret: env.instance().gap(rec.arm),
                });
            }
        }
        debug_assert_eq!(env.total_pulls(), last);
        Ok(TrialTrajectory {
            policy: spec.to_string(),
            trial,
            seed: reward_seed,
            records,
            zero_pull_stages: policy.zero_pull_stages(),
        })
    }

    /// All trials of one policy, in trial order.
    pub fn run_policy(&self, spec: &PolicySpec) -> Result<Vec<TrialTrajectory>> {
        let first = self.config.trial_offset;
        (first..first + self.config.trials)
            .into_par_iter()
            .map(|trial| self.run_trial(spec, trial))
            .collect()
    }

    /// Aggregates every configured policy. `jobs` caps the worker count
    /// without changing the result.
    pub fn monte_carlo(&self, jobs: Option<usize>) -> Result<MetricsSummary> {
        let run = || -> Result<MetricsSummary> {
            let mut summary = MetricsSummary::new(self.config.config_hash(), self.config.epsilons.clone());
            for spec in &self.config.policies {
                let trajs = self.run_policy(spec)?;
                summary.add_policy(&spec.to_string(), &trajs);
            }
            Ok(summary)
        };
        match jobs {
            Some(j) => rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
                .install(run),
            None => run(),
        }
    }
}

fn step(policy: &mut dyn Policy, env: &mut Environment) -> Result<usize> {
    let arm = policy.next_arm();
    let r = env.pull(arm)?;
    policy.observe(r.value)?;
    Ok(arm)
}

fn annotate(e: Error, spec: &PolicySpec, trial: u64, t: u64) -> Error {
    match e {
        Error::Contract(m) => Error::Contract(format!("policy `{spec}`, trial {trial}, step {t}: {m}")),
        Error::ArmOutOfRange { arm, n } => Error::Contract(format!(
            "policy `{spec}`, trial {trial}, step {t}: pulled arm {arm} of {n}"
        )),
        other => other,
    }
}

/// Convenience wrapper: load, validate and aggregate in one call.
pub fn monte_carlo(config: &ExperimentConfig) -> Result<MetricsSummary> {
    Experiment::new(config.clone(), None)?.monte_carlo(None)
}

/// Convenience wrapper for a single trajectory.
pub fn run_trial(config: &ExperimentConfig, spec: &PolicySpec, trial: u64) -> Result<TrialTrajectory> {
    Experiment::new(config.clone(), None)?.run_trial(spec, trial)
}
