use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use purex::algorithms::{
    initial_block_len, sh_schedule, Allocation, Bracketing, DoublingSh, InnerKind, ReuseFlags, SequentialHalving,
    ShConfig, TieBreak, UniformSampling,
};
use purex::harness::{Experiment, ExperimentConfig, MetricsSummary};
use purex::instance::NoiseModel;
use purex::seed::rng_from_seed;
use purex::{Environment, Instance, Policy, PolicySpec};

const SPECS: [&str; 9] = [
    "sh",
    "sh:opt=2",
    "sh:tie=random,reuse=1",
    "dsh",
    "dsh:warm=1",
    "bsh",
    "bsh:share=1,reuse=1",
    "uniform",
    "bucb:delta=0.2",
];

fn random_instance(n: usize, seed: u64, bernoulli: bool) -> Instance {
    let mut rng = rng_from_seed(seed);
    let means = (0..n).map(|_| rng.random::<f64>()).collect();
    let noise = if bernoulli {
        NoiseModel::Bernoulli
    } else {
        NoiseModel::Gaussian { sigma: 1.0 }
    };
    Instance::new("prop", noise, means).unwrap()
}

/// Rewards indexed by (underlying arm, sample number), so two runs that pull
/// the same arm for the k-th time see the same value.
struct RewardTable {
    means: Vec<f64>,
    noise: Vec<Vec<f64>>,
    taken: Vec<usize>,
}

impl RewardTable {
    fn new(means: Vec<f64>, per_arm: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let noise = (0..means.len())
            .map(|_| (0..per_arm).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let taken = vec![0; means.len()];
        RewardTable { means, noise, taken }
    }

    fn pull(&mut self, arm: usize) -> f64 {
        let k = self.taken[arm];
        self.taken[arm] += 1;
        self.means[arm] + self.noise[arm][k]
    }
}

/// Regret after every step when `policy` runs on `means[perm[slot]]`.
fn regret_path(policy: &mut dyn Policy, table: &mut RewardTable, perm: &[usize], steps: u64) -> Vec<f64> {
    let best = table.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::with_capacity(steps as usize);
    for _ in 0..steps {
        let slot = policy.next_arm();
        let r = table.pull(perm[slot]);
        policy.observe(r).unwrap();
        out.push(best - table.means[perm[policy.recommend().arm]]);
    }
    out
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(seed);
    for i in (1..n).rev() {
        p.swap(i, rng.random_range(0..=i));
    }
    p
}

fn summary(config: &ExperimentConfig) -> MetricsSummary {
    Experiment::new(config.clone(), None).unwrap().monte_carlo(None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_policy_pulls_exactly_once_per_step(
        spec in prop::sample::select(SPECS.to_vec()),
        n in 1usize..40,
        horizon in 1u64..400,
        seed: u64,
        bernoulli: bool,
    ) {
        let spec: PolicySpec = spec.parse().unwrap();
        let mut policy = spec.build(n, horizon, ReuseFlags::default(), seed);
        let mut env = Environment::new(random_instance(n, seed, bernoulli), seed);
        for t in 1..=horizon {
            let arm = policy.next_arm();
            prop_assert!(arm < n);
            prop_assert_eq!(policy.next_arm(), arm);
            let r = env.pull(arm).unwrap();
            policy.observe(r.value).unwrap();
            prop_assert_eq!(env.total_pulls(), t);
            prop_assert!(policy.recommend().arm < n);
        }
    }

    #[test]
    fn sh_never_exceeds_its_budget(n in 1usize..300, budget in 1u64..5000, opt2: bool, seed: u64) {
        let mut cfg = ShConfig::new(budget);
        if opt2 {
            cfg.allocation = Allocation::Option2;
        }
        let mut sh = SequentialHalving::new(n, cfg, seed);
        let mut env = Environment::new(random_instance(n, seed, false), seed);
        let mut steps = 0u64;
        while !sh.finished() {
            let arm = sh.next_arm();
            let r = env.pull(arm).unwrap();
            sh.observe(r.value).unwrap();
            steps += 1;
            prop_assert!(steps <= budget);
        }
        prop_assert_eq!(sh.survivors().len(), 1);
    }

    #[test]
    fn sh_and_dsh_are_permutation_equivariant(
        n in 2usize..24,
        budget in 40u64..600,
        seed: u64,
        random_ties: bool,
    ) {
        let mut rng = rng_from_seed(seed ^ 1);
        let means: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let perm = permutation(n, seed);
        let identity: Vec<usize> = (0..n).collect();
        let mut cfg = ShConfig::new(budget);
        if random_ties {
            cfg.tie_break = TieBreak::SeededRandom;
        }

        // Zero-pull stages break ties by slot, which is not index-free.
        let full = |t: u64| sh_schedule(n, t, cfg.allocation).iter().all(|s| s.pulls_per_arm > 0);
        if full(budget) {
            let mut a = RewardTable::new(means.clone(), budget as usize, seed);
            let mut b = RewardTable::new(means.clone(), budget as usize, seed);
            let pa = regret_path(&mut SequentialHalving::new(n, cfg, 3), &mut a, &identity, budget);
            let pb = regret_path(&mut SequentialHalving::new(n, cfg, 3), &mut b, &perm, budget);
            prop_assert_eq!(pa.last(), pb.last());
        }

        // With n a power of two the first block has no zero-pull stage and no
        // idle steps on the placeholder slot, so histories match from T_1.
        let n = 1usize << (n % 5 + 1);
        let means: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let perm = permutation(n, seed);
        let identity: Vec<usize> = (0..n).collect();
        let steps = 6 * budget;
        let mut a = RewardTable::new(means.clone(), steps as usize, seed);
        let mut b = RewardTable::new(means, steps as usize, seed);
        let pa = regret_path(&mut DoublingSh::new(n, cfg, false, 3), &mut a, &identity, steps);
        let pb = regret_path(&mut DoublingSh::new(n, cfg, false, 3), &mut b, &perm, steps);
        let t1 = initial_block_len(n) as usize;
        prop_assert_eq!(&pa[t1 - 1..], &pb[t1 - 1..]);
    }

    #[test]
    fn uniform_is_equivariant_after_each_full_round(n in 1usize..30, rounds in 1u64..20, seed: u64) {
        let mut rng = rng_from_seed(seed ^ 2);
        let means: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let perm = permutation(n, seed);
        let identity: Vec<usize> = (0..n).collect();
        let steps = rounds * n as u64;
        let mut a = RewardTable::new(means.clone(), rounds as usize, seed);
        let mut b = RewardTable::new(means, rounds as usize, seed);
        let pa = regret_path(&mut UniformSampling::new(n), &mut a, &identity, steps);
        let pb = regret_path(&mut UniformSampling::new(n), &mut b, &perm, steps);
        for r in 1..=rounds as usize {
            prop_assert_eq!(pa[r * n - 1], pb[r * n - 1]);
        }
    }

    #[test]
    fn bsh_recommends_a_bracket_arm_and_keeps_its_estimate(
        n in 1usize..200,
        steps in 1u64..3000,
        seed: u64,
        ucb: bool,
        share: bool,
    ) {
        let kind = if ucb {
            InnerKind::Ucb { delta: 0.2, sigma: 1.0 }
        } else {
            InnerKind::Dsh { template: ShConfig::new(0), warm_start: false }
        };
        let mut bsh = Bracketing::new(n, kind, share, seed);
        let mut env = Environment::new(random_instance(n, seed, true), seed);
        let mut had_estimate = false;
        for _ in 0..steps {
            let arm = bsh.next_arm();
            let r = env.pull(arm).unwrap();
            bsh.observe(r.value).unwrap();
            let rec = bsh.recommend();
            let in_bracket = (0..bsh.open_brackets()).any(|b| bsh.bracket_slots(b).contains(&rec.arm));
            prop_assert!(in_bracket);
            prop_assert!(!(had_estimate && !rec.has_estimate()));
            had_estimate |= rec.has_estimate();
        }
        prop_assert_eq!(bsh.bracket_pulls().iter().sum::<u64>(), steps);
    }

    #[test]
    fn split_runs_merge_exactly(split in 1u64..19, seed: u64) {
        let text = format!(r#"{{"instance":{{"kind":"equal_gap","n":12,"m":3,"eps":0.2}},
            "policies":["dsh","bsh","uniform","sh:T=60"],"horizon":90,"trials":20,"seed":{seed},
            "checkpoints":{{"every":30}},"epsilons":[0.2,0.5]}}"#);
        let full_cfg = ExperimentConfig::from_json(&text).unwrap();
        let full = summary(&full_cfg);
        let mut first = full_cfg.clone();
        first.trials = split;
        let mut second = full_cfg.clone();
        second.trials = 20 - split;
        second.trial_offset = split;
        let mut merged = summary(&second);
        merged.merge(&summary(&first)).unwrap();
        prop_assert_eq!(merged, full);
    }
}
