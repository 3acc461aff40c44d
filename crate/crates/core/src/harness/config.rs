use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algorithms::{PolicySpec, ReuseFlags};
use crate::error::{Error, Result};
use crate::instance::{
    caption::parse_caption_csv, make_equal_gap, make_polynomial, make_uniform_random, Instance, NoiseModel,
};

/// Where the arm means come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    EqualGap {
        n: usize,
        m: usize,
        eps: f64,
    },
    Polynomial {
        n: usize,
        alpha: f64,
    },
    Inline {
        means: Vec<f64>,
        #[serde(default)]
        noise: NoiseModel,
    },
    /// Instance JSON document.
    File {
        path: PathBuf,
    },
    /// Caption vote table, one Bernoulli arm per row.
    CaptionCsv {
        path: PathBuf,
    },
    /// Means drawn i.i.d. from `U[low, high]`, once per trial when
    /// `per_trial` is set, otherwise once per experiment.
    UniformRandom {
        n: usize,
        #[serde(default)]
        low: f64,
        #[serde(default = "one")]
        high: f64,
        #[serde(default)]
        per_trial: bool,
    },
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// Checkpoint times: either `{"every": k}` (k, 2k, ... up to the horizon) or
/// an explicit sorted list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Checkpoints {
    Every { every: u64 },
    List(Vec<u64>),
}

impl Checkpoints {
    pub fn resolve(&self, horizon: u64) -> Result<Vec<u64>> {
        let times = match self {
            Checkpoints::Every { every } => {
                if *every == 0 {
                    return Err(Error::InvalidArgument("checkpoint spacing must be positive".into()));
                }
                (1..=horizon / every).map(|k| k * every).collect::<Vec<_>>()
            }
            Checkpoints::List(v) => v.clone(),
        };
        if times.is_empty() {
            return Err(Error::InvalidArgument("no checkpoint times".into()));
        }
        if times[0] == 0 || times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "checkpoint times must be positive and strictly increasing".into(),
            ));
        }
        if *times.last().unwrap() > horizon {
            return Err(Error::InvalidArgument(format!(
                "checkpoint {} exceeds the horizon {horizon}",
                times.last().unwrap()
            )));
        }
        Ok(times)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    /// Replaces the instance's noise model when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    pub policies: Vec<PolicySpec>,
    pub horizon: u64,
    pub trials: u64,
    /// Index of the first trial. Splitting a run into disjoint offsets and
    /// merging the summaries reproduces the single run.
    #[serde(default)]
    pub trial_offset: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub checkpoints: Checkpoints,
    #[serde(default = "yes")]
    pub permute: bool,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub reuse: ReuseFlags,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn master_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn validate(&self) -> Result<Vec<u64>> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidArgument("at least one policy is required".into()));
        }
        for &e in &self.epsilons {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::InvalidArgument(format!("epsilon {e} must be nonnegative")));
            }
        }
        for p in &self.policies {
            if let PolicySpec::Sh { budget: Some(b), .. } = p {
                if *b > self.horizon {
                    return Err(Error::InvalidArgument(format!(
                        "policy `{p}` has budget {b} beyond the horizon {}",
                        self.horizon
                    )));
                }
            }
        }
        if let Some(noise) = self.noise {
            noise.validate()?;
        }
        self.checkpoints.resolve(self.horizon)
    }

    /// SHA-256 of the canonical JSON form, ignoring `trials` and
    /// `trial_offset` so that split runs hash alike.
    pub fn config_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("trials");
            map.remove("trial_offset");
        }
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Applies a `dotted.path=value` override. The value is parsed as JSON
    /// and falls back to a plain string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("override `{assignment}` is not path=value")))?;
        let new_value: serde_json::Value =
            serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        let mut doc = serde_json::to_value(&*self)?;
        let mut cursor = &mut doc;
        let keys: Vec<&str> = path.split('.').collect();
        for (i, key) in keys.iter().enumerate() {
            let last = i + 1 == keys.len();
            cursor = match cursor {
                serde_json::Value::Object(map) => {
                    if last {
                        map.insert(key.to_string(), new_value.clone());
                        break;
                    }
                    map.entry(key.to_string()).or_insert_with(|| serde_json::json!({}))
                }
                serde_json::Value::Array(items) => {
                    let idx: usize = key
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("`{key}` in `{path}` is not an index")))?;
                    let len = items.len();
                    let slot = items.get_mut(idx).ok_or_else(|| {
                        Error::InvalidArgument(format!("index {idx} in `{path}` out of range (len {len})"))
                    })?;
                    if last {
                        *slot = new_value.clone();
                        break;
                    }
                    slot
                }
                _ => return Err(Error::InvalidArgument(format!("`{path}` does not name a config field"))),
            };
        }
        *self = serde_json::from_value(doc)
            .map_err(|e| Error::InvalidArgument(format!("override `{assignment}`: {e}")))?;
        Ok(())
    }
}

/// Loads the experiment-level instance. `base` resolves relative paths.
/// For per-trial random instances this is only a template and is replaced
/// every trial.
pub(crate) fn load_instance(spec: &InstanceSpec, base: &Path, rng_seed: u64) -> Result<Instance> {
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    match spec {
        InstanceSpec::EqualGap { n, m, eps } => make_equal_gap(*n, *m, *eps),
        InstanceSpec::Polynomial { n, alpha } => make_polynomial(*n, *alpha),
        InstanceSpec::Inline { means, noise } => Instance::new("inline", *noise, means.clone()),
        InstanceSpec::File { path } => {
            let path = resolve(path);
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            Instance::from_json(&text)
        }
        InstanceSpec::CaptionCsv { path } => {
            let path = resolve(path);
            let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
            let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(parse_caption_csv(std::io::BufReader::new(file))?.with_label(label))
        }
        InstanceSpec::UniformRandom { n, low, high, .. } => {
            let mut rng = crate::seed::rng_from_seed(rng_seed);
            make_uniform_random(*n, *low, *high, &mut rng)
        }
    }
}
