//! Pure-exploration multi-armed bandits.
//!
//! The crate is organised bottom-up:
//!
//! * [`instance`]: arm means, noise models, gap profiles and instance generators,
//!   plus ingestion of caption-contest vote tables.
//! * [`env`]: a seeded reward environment with exact pull accounting.
//! * [`algorithms`]: Sequential Halving (two budget allocations), Doubling SH,
//!   Bracketing SH, uniform sampling, a bracketed UCB baseline and the uniform
//!   top-`s` selector.
//! * [`bounds`]: closed-form error-probability, regret and bracket-count formulas.
//! * [`harness`]: a deterministic, parallel Monte-Carlo runner and metric export.
//! * [`cli`]: the `purex` command-line front end.

pub mod algorithms;
pub mod bounds;
pub mod cli;
pub mod env;
pub mod error;
pub mod harness;
pub mod instance;
pub mod seed;

pub use algorithms::{Policy, PolicySpec, Recommendation};
pub use env::{Environment, RewardSample};
pub use error::{Error, Result};
pub use instance::{GapProfile, Instance, NoiseModel};
