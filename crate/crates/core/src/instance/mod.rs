//! Bandit instances: arm means plus a shared noise model.

pub mod caption;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

pub use caption::{parse_caption_csv, CaptionRow, CaptionTable};

/// Absolute slack used whenever a gap is compared against a threshold, so that
/// e.g. `0.45 - 0.3` still counts as a gap of `0.15`.
pub const GAP_TOLERANCE: f64 = 1e-12;

/// `true` when an arm with suboptimality `gap` is `eps`-good.
pub fn is_eps_good(gap: f64, eps: f64) -> bool {
    gap <= eps + GAP_TOLERANCE
}

/// Reward noise shared by all arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseModel {
    /// `reward = mean + N(0, sigma^2)`, unclipped.
    Gaussian { sigma: f64 },
    /// `reward ~ Bernoulli(mean)`.
    Bernoulli,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::Gaussian { sigma: 1.0 }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian { sigma } if !(sigma.is_finite() && sigma >= 0.0) => Err(
                Error::InvalidInstance(format!("gaussian sigma must be finite and >= 0, got {sigma}")),
            ),
            _ => Ok(()),
        }
    }
}

/// An immutable vector of arm means in `[0, 1]` with a noise model.
///
/// Means are stored in whatever order they were given; nothing in the crate
/// assumes the best arm comes first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc", into = "InstanceDoc")]
pub struct Instance {
    label: String,
    noise: NoiseModel,
    means: Vec<f64>,
    max_mean: f64,
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    label: String,
    noise: NoiseModel,
    means: Vec<f64>,
}

impl TryFrom<InstanceDoc> for Instance {
    type Error = Error;

    fn try_from(doc: InstanceDoc) -> Result<Self> {
        Instance::new(doc.label, doc.noise, doc.means)
    }
}

impl From<Instance> for InstanceDoc {
    fn from(inst: Instance) -> Self {
        InstanceDoc {
            label: inst.label,
            noise: inst.noise,
            means: inst.means,
        }
    }
}

impl Instance {
    pub fn new(label: impl Into<String>, noise: NoiseModel, means: Vec<f64>) -> Result<Self> {
        noise.validate()?;
        if means.is_empty() {
            return Err(Error::InvalidInstance("an instance needs at least one arm".into()));
        }
        if let Some((i, mu)) = means
            .iter()
            .enumerate()
            .find(|(_, mu)| !(mu.is_finite() && (0.0..=1.0).contains(*mu)))
        {
            return Err(Error::InvalidInstance(format!(
                "mean of arm {i} is {mu}, expected a value in [0, 1]"
            )));
        }
        let max_mean = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Instance {
            label: label.into(),
            noise,
            means,
            max_mean,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn n(&self) -> usize {
        self.means.len()
    }

    pub fn max_mean(&self) -> f64 {
        self.max_mean
    }

    /// `mu_max - mu_arm`. Panics if `arm` is out of range.
    pub fn gap(&self, arm: usize) -> f64 {
        self.max_mean - self.means[arm]
    }

    /// Index of a best arm (lowest index among ties).
    pub fn best_arm(&self) -> usize {
        self.means
            .iter()
            .position(|&mu| mu == self.max_mean)
            .expect("non-empty instance has a maximum")
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        self.noise = noise;
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn gap_profile(&self) -> GapProfile {
        let mut gaps: Vec<f64> = self.means.iter().map(|mu| self.max_mean - mu).collect();
        gaps.sort_by(f64::total_cmp);
        GapProfile { gaps }
    }

    /// Number of arms within `eps` of the best mean.
    pub fn m_eps(&self, eps: f64) -> usize {
        self.means
            .iter()
            .filter(|&&mu| is_eps_good(self.max_mean - mu, eps))
            .count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Suboptimality gaps `Delta_i = mu_max - mu_i`, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    gaps: Vec<f64>,
}

impl GapProfile {
    /// Builds a profile from raw gaps in any order. The smallest gap must be
    /// zero (some arm is the best).
    pub fn from_gaps(mut gaps: Vec<f64>) -> Result<Self> {
        if gaps.is_empty() {
            return Err(Error::InvalidArgument("gap profile needs at least one arm".into()));
        }
        if gaps.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidArgument("gaps must be finite and nonnegative".into()));
        }
        gaps.sort_by(f64::total_cmp);
        if gaps[0] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "the smallest gap must be 0 (the best arm), got {}",
                gaps[0]
            )));
        }
        Ok(GapProfile { gaps })
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn n(&self) -> usize {
        self.gaps.len()
    }

    /// `Delta_{i,j} = mu_(i) - mu_(j)` for 0-based ranks in the sorted order.
    pub fn pairwise(&self, i: usize, j: usize) -> f64 {
        self.gaps[j] - self.gaps[i]
    }

    pub fn m_eps(&self, eps: f64) -> usize {
        self.gaps.iter().filter(|&&g| is_eps_good(g, eps)).count()
    }
}

/// Two-level instance `[1.5 eps, eps x (m-1), 0 x (n-m)]` with unit Gaussian noise.
pub fn make_equal_gap(n: usize, m: usize, eps: f64) -> Result<Instance> {
    if m < 2 || m > n {
        return Err(Error::InvalidArgument(format!(
            "equal-gap instance needs 2 <= m <= n, got n={n}, m={m}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("equal-gap eps must lie in (0,1), got {eps}")));
    }
    if 1.5 * eps > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "equal-gap eps={eps} puts the best mean 1.5*eps above 1"
        )));
    }
    let mut means = Vec::with_capacity(n);
    means.push(1.5 * eps);
    means.extend(std::iter::repeat_n(eps, m - 1));
    means.extend(std::iter::repeat_n(0.0, n - m));
    Instance::new(
        format!("equal-gap(n={n},m={m},eps={eps})"),
        NoiseModel::default(),
        means,
    )
}

/// `mu_1 = 1`, `mu_i = 1 - (i/n)^alpha` for `i >= 2`, with unit Gaussian noise.
pub fn make_polynomial(n: usize, alpha: f64) -> Result<Instance> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("polynomial instance needs n >= 2, got {n}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("polynomial alpha must be > 0, got {alpha}")));
    }
    let means = (1..=n)
        .map(|i| {
            if i == 1 {
                1.0
            } else {
                1.0 - (i as f64 / n as f64).powf(alpha)
            }
        })
        .collect();
    Instance::new(
        format!("polynomial(n={n},alpha={alpha})"),
        NoiseModel::default(),
        means,
    )
}

/// `n` means drawn i.i.d. uniformly from `[low, high]`.
pub fn make_uniform_random<R: Rng + ?Sized>(n: usize, low: f64, high: f64, rng: &mut R) -> Result<Instance> {
    if !(0.0 <= low && low <= high && high <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "uniform means need 0 <= low <= high <= 1, got [{low}, {high}]"
        )));
    }
    let means = (0..n).map(|_| low + (high - low) * rng.random::<f64>()).collect();
    Instance::new(
        format!("uniform(n={n},low={low},high={high})"),
        NoiseModel::default(),
        means,
    )
}

/// Index map produced by [`permute`]: position `i` of the permuted instance
/// holds original arm `original_index(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { map: (0..n).collect() }
    }

    pub fn original_index(&self, permuted: usize) -> usize {
        self.map[permuted]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    /// Undoes the permutation on a vector laid out in permuted order.
    pub fn restore<T: Clone>(&self, permuted: &[T]) -> Vec<T> {
        assert_eq!(permuted.len(), self.map.len(), "length mismatch");
        let mut out: Vec<Option<T>> = vec![None; permuted.len()];
        for (i, value) in permuted.iter().enumerate() {
            out[self.map[i]] = Some(value.clone());
        }
        out.into_iter().map(|v| v.expect("permutation is a bijection")).collect()
    }
}

/// Uniformly random reordering of the arms, driven by `seed`.
pub fn permute(instance: &Instance, seed: u64) -> (Instance, Permutation) {
    let mut map: Vec<usize> = (0..instance.n()).collect();
    map.shuffle(&mut rng_from_seed(seed));
    let means = map.iter().map(|&i| instance.means[i]).collect();
    let permuted = Instance {
        label: instance.label.clone(),
        noise: instance.noise,
        means,
        max_mean: instance.max_mean,
    };
    (permuted, Permutation { map })
}
