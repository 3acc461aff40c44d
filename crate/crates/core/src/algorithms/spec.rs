//! Textual policy specs.
//!
//! ```text
//! sh[:T=<budget>][,opt=1|2][,tie=lowest|random][,reuse=0|1]
//! dsh[:opt=1|2][,tie=..][,reuse=0|1][,warm=0|1]
//! bsh[:opt=1|2][,tie=..][,reuse=0|1][,warm=0|1][,share=0|1]
//! uniform
//! bucb:delta=<(0,1)>[,sigma=<positive>]
//! ```
//!
//! `sh` without `T` uses the experiment horizon. Reuse switches left out of a
//! spec fall back to the experiment-wide [`ReuseFlags`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algorithms::{
    Allocation, Bracketing, DoublingSh, InnerKind, Policy, ReuseFlags, SequentialHalving, ShConfig,
    TieBreak, UniformSampling,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShOptions {
    pub allocation: Allocation,
    pub tie_break: TieBreak,
    pub reuse: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicySpec {
    Sh { budget: Option<u64>, options: ShOptions },
    Dsh { options: ShOptions, warm: Option<bool> },
    Bsh { options: ShOptions, warm: Option<bool>, share: Option<bool> },
    Uniform,
    Bucb { delta: f64, sigma: f64 },
}

fn spec_err(token: &str, message: impl Into<String>) -> Error {
    Error::PolicySpec {
        token: token.to_string(),
        message: message.into(),
    }
}

fn parse_flag(token: &str, value: &str) -> Result<bool> {
    match value {
        "1" | "true" | "on" => Ok(true),
        "0" | "false" | "off" => Ok(false),
        _ => Err(spec_err(token, "expected 0 or 1")),
    }
}

fn parse_num<T: FromStr>(token: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| spec_err(token, format!("`{value}` is not a valid number")))
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Sh { .. } => "sh",
            PolicySpec::Dsh { .. } => "dsh",
            PolicySpec::Bsh { .. } => "bsh",
            PolicySpec::Uniform => "uniform",
            PolicySpec::Bucb { .. } => "bucb",
        }
    }

    /// Anytime policies produce a recommendation at every step; `sh` only at
    /// the end of its budget.
    pub fn is_anytime(&self) -> bool {
        !matches!(self, PolicySpec::Sh { .. })
    }

    /// Instantiates the policy for `n` arms. `horizon` is the default SH budget.
    pub fn build(&self, n: usize, horizon: u64, reuse: ReuseFlags, seed: u64) -> Box<dyn Policy> {
        let sh_config = |budget: u64, o: &ShOptions| ShConfig {
            budget,
            allocation: o.allocation,
            tie_break: o.tie_break,
            reuse_samples: o.reuse.unwrap_or(reuse.sh_samples),
        };
        match self {
            PolicySpec::Sh { budget, options } => Box::new(SequentialHalving::new(
                n,
                sh_config(budget.unwrap_or(horizon), options),
                seed,
            )),
            PolicySpec::Dsh { options, warm } => Box::new(DoublingSh::new(
                n,
                sh_config(0, options),
                warm.unwrap_or(reuse.dsh_warm_start),
                seed,
            )),
            PolicySpec::Bsh { options, warm, share } => Box::new(Bracketing::new(
                n,
                InnerKind::Dsh {
                    template: sh_config(0, options),
                    warm_start: warm.unwrap_or(reuse.dsh_warm_start),
                },
                share.unwrap_or(reuse.bracket_sharing),
                seed,
            )),
            PolicySpec::Uniform => Box::new(UniformSampling::new(n)),
            PolicySpec::Bucb { delta, sigma } => Box::new(Bracketing::new(
                n,
                InnerKind::Ucb {
                    delta: *delta,
                    sigma: *sigma,
                },
                false,
                seed,
            )),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (text, None),
        };
        let mut pairs = Vec::new();
        if let Some(rest) = rest {
            for token in rest.split(',') {
                let token = token.trim();
                let (k, v) = token
                    .split_once('=')
                    .ok_or_else(|| spec_err(token, "expected key=value"))?;
                pairs.push((token, k.trim(), v.trim()));
            }
        }

        let mut sh = ShOptions::default();
        let mut budget = None;
        let mut warm = None;
        let mut share = None;
        let mut delta = None;
        let mut sigma = None;
        let sh_family = matches!(name, "sh" | "dsh" | "bsh");
        for &(token, key, value) in &pairs {
            match (name, key) {
                ("sh", "T") => {
                    let t: u64 = parse_num(token, value)?;
                    if t == 0 {
                        return Err(spec_err(token, "budget must be at least 1"));
                    }
                    budget = Some(t);
                }
                (_, "opt") if sh_family => {
                    sh.allocation = match value {
                        "1" => Allocation::Option1,
                        "2" => Allocation::Option2,
                        _ => return Err(spec_err(token, "allocation option must be 1 or 2")),
                    }
                }
                (_, "tie") if sh_family => {
                    sh.tie_break = match value {
                        "lowest" => TieBreak::LowestIndex,
                        "random" => TieBreak::SeededRandom,
                        _ => return Err(spec_err(token, "tie must be `lowest` or `random`")),
                    }
                }
                (_, "reuse") if sh_family => sh.reuse = Some(parse_flag(token, value)?),
                ("dsh" | "bsh", "warm") => warm = Some(parse_flag(token, value)?),
                ("bsh", "share") => share = Some(parse_flag(token, value)?),
                ("bucb", "delta") => {
                    let d: f64 = parse_num(token, value)?;
                    if !(d > 0.0 && d < 1.0) {
                        return Err(spec_err(token, "delta must lie in (0, 1)"));
                    }
                    delta = Some(d);
                }
                ("bucb", "sigma") => {
                    let s: f64 = parse_num(token, value)?;
                    if !(s > 0.0 && s.is_finite()) {
                        return Err(spec_err(token, "sigma must be positive"));
                    }
                    sigma = Some(s);
                }
                ("sh" | "dsh" | "bsh" | "uniform" | "bucb", _) => {
                    return Err(spec_err(token, format!("unknown option `{key}` for `{name}`")))
                }
                _ => break,
            }
        }

        match name {
            "sh" => Ok(PolicySpec::Sh { budget, options: sh }),
            "dsh" => Ok(PolicySpec::Dsh { options: sh, warm }),
            "bsh" => Ok(PolicySpec::Bsh {
                options: sh,
                warm,
                share,
            }),
            "uniform" => Ok(PolicySpec::Uniform),
            "bucb" => Ok(PolicySpec::Bucb {
                delta: delta.ok_or_else(|| spec_err(text, "bucb requires delta=<value>"))?,
                sigma: sigma.unwrap_or(1.0),
            }),
            _ => Err(spec_err(name, "unknown policy (expected sh, dsh, bsh, uniform or bucb)")),
        }
    }
}

impl fmt::Display for PolicySpec {
    /// Canonical form; parsing it gives back an equal spec.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut opts: Vec<String> = Vec::new();
        let push_sh = |opts: &mut Vec<String>, o: &ShOptions| {
            if o.allocation == Allocation::Option2 {
                opts.push("opt=2".into());
            }
            if o.tie_break == TieBreak::SeededRandom {
                opts.push("tie=random".into());
            }
            if let Some(r) = o.reuse {
                opts.push(format!("reuse={}", r as u8));
            }
        };
        match self {
            PolicySpec::Sh { budget, options } => {
                if let Some(t) = budget {
                    opts.push(format!("T={t}"));
                }
                push_sh(&mut opts, options);
            }
            PolicySpec::Dsh { options, warm } => {
                push_sh(&mut opts, options);
                if let Some(w) = warm {
                    opts.push(format!("warm={}", *w as u8));
                }
            }
            PolicySpec::Bsh { options, warm, share } => {
                push_sh(&mut opts, options);
                if let Some(w) = warm {
                    opts.push(format!("warm={}", *w as u8));
                }
                if let Some(s) = share {
                    opts.push(format!("share={}", *s as u8));
                }
            }
            PolicySpec::Uniform => {}
            PolicySpec::Bucb { delta, sigma } => {
                opts.push(format!("delta={delta}"));
                if *sigma != 1.0 {
                    opts.push(format!("sigma={sigma}"));
                }
            }
        }
        if opts.is_empty() {
            f.write_str(self.name())
        } else {
            write!(f, "{}:{}", self.name(), opts.join(","))
        }
    }
}

impl TryFrom<String> for PolicySpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicySpec> for String {
    fn from(p: PolicySpec) -> String {
        p.to_string()
    }
}
