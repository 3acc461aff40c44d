//! C ABI for `purex`.
//!
//! Handles are opaque pointers created by a `*_new` function and released by
//! the matching `*_free`. Every fallible call returns a [`PurexStatus`]; on
//! failure, [`purex_last_error_message`] describes the error for the calling
//! thread. Output pointers are written only on success.
//!
//! Handles are not thread-safe; use one per thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use purex::algorithms::{Policy, PolicySpec, ReuseFlags};
use purex::bounds;
use purex::env::Environment;
use purex::harness::{Experiment, ExperimentConfig};
use purex::{Error, Instance, NoiseModel};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PurexStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    ContractViolation = 4,
    OutOfRange = 5,
    Runtime = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PurexNoise {
    Gaussian = 0,
    Bernoulli = 1,
}

pub struct PurexInstance {
    inner: Instance,
}

pub struct PurexEnv {
    inner: Environment,
}

pub struct PurexPolicy {
    inner: Box<dyn Policy>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn status_of(err: &Error) -> PurexStatus {
    match err {
        Error::Contract(_) => PurexStatus::ContractViolation,
        Error::ArmOutOfRange { .. } => PurexStatus::OutOfRange,
        Error::Io { .. } => PurexStatus::Runtime,
        _ => PurexStatus::InvalidArgument,
    }
}

struct Fail(PurexStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> PurexStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            PurexStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PurexStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(PurexStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn out<T>(p: *mut T, what: &str, value: T) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(PurexStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `purex_*` call on this thread.
#[no_mangle]
pub extern "C" fn purex_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `means` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn purex_instance_new(
    means: *const f64,
    n: usize,
    noise: PurexNoise,
    sigma: f64,
    out_instance: *mut *mut PurexInstance,
) -> PurexStatus {
    guard(|| {
        if means.is_null() {
            return Err(null("means"));
        }
        let means = std::slice::from_raw_parts(means, n).to_vec();
        let noise = match noise {
            PurexNoise::Gaussian => NoiseModel::Gaussian { sigma },
            PurexNoise::Bernoulli => NoiseModel::Bernoulli,
        };
        let inst = Instance::new("ffi", noise, means)?;
        out(out_instance, "out_instance", Box::into_raw(Box::new(PurexInstance { inner: inst })))
    })
}

/// # Safety
/// `instance` must come from `purex_instance_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn purex_instance_free(instance: *mut PurexInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn purex_instance_n(instance: *const PurexInstance, out_n: *mut usize) -> PurexStatus {
    guard(|| out(out_n, "out_n", borrow(instance, "instance")?.inner.n()))
}

/// Gap `max mean - mean[arm]`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn purex_instance_gap(
    instance: *const PurexInstance,
    arm: usize,
    out_gap: *mut f64,
) -> PurexStatus {
    guard(|| {
        let inst = &borrow(instance, "instance")?.inner;
        if arm >= inst.n() {
            return Err(Error::ArmOutOfRange { arm, n: inst.n() }.into());
        }
        out(out_gap, "out_gap", inst.gap(arm))
    })
}

/// Environment over a copy of `instance`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn purex_env_new(
    instance: *const PurexInstance,
    seed: u64,
    out_env: *mut *mut PurexEnv,
) -> PurexStatus {
    guard(|| {
        let inst = borrow(instance, "instance")?.inner.clone();
        out(out_env, "out_env", Box::into_raw(Box::new(PurexEnv { inner: Environment::new(inst, seed) })))
    })
}

/// # Safety
/// `env` must come from `purex_env_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn purex_env_free(env: *mut PurexEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn purex_env_pull(env: *mut PurexEnv, arm: usize, out_reward: *mut f64) -> PurexStatus {
    guard(|| {
        let r = borrow_mut(env, "env")?.inner.pull(arm)?;
        out(out_reward, "out_reward", r.value)
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn purex_env_total_pulls(env: *const PurexEnv, out_total: *mut u64) -> PurexStatus {
    guard(|| out(out_total, "out_total", borrow(env, "env")?.inner.total_pulls()))
}

/// Builds a policy from a spec such as `"bsh"` or `"sh:T=1000,opt=2"`.
/// `horizon` is the budget for `sh` without `T`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out_policy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn purex_policy_new(
    spec: *const c_char,
    n: usize,
    horizon: u64,
    seed: u64,
    out_policy: *mut *mut PurexPolicy,
) -> PurexStatus {
    guard(|| {
        let spec: PolicySpec = text(spec, "spec")?.parse()?;
        if n == 0 {
            return Err(Fail(PurexStatus::InvalidArgument, "n must be at least 1".into()));
        }
        if matches!(spec, PolicySpec::Sh { budget: None, .. }) && horizon == 0 {
            return Err(Fail(PurexStatus::InvalidArgument, "sh needs a budget".into()));
        }
        let inner = spec.build(n, horizon, ReuseFlags::default(), seed);
        out(out_policy, "out_policy", Box::into_raw(Box::new(PurexPolicy { inner })))
    })
}

/// # Safety
/// `policy` must come from `purex_policy_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn purex_policy_free(policy: *mut PurexPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn purex_policy_next_arm(policy: *mut PurexPolicy, out_arm: *mut usize) -> PurexStatus {
    guard(|| {
        let p = borrow_mut(policy, "policy")?;
        if out_arm.is_null() {
            return Err(null("out_arm"));
        }
        out(out_arm, "out_arm", p.inner.next_arm())
    })
}

/// # Safety
/// `policy` must be valid.
#[no_mangle]
pub unsafe extern "C" fn purex_policy_observe(policy: *mut PurexPolicy, reward: f64) -> PurexStatus {
    guard(|| Ok(borrow_mut(policy, "policy")?.inner.observe(reward)?))
}

/// Current recommendation. `out_mean` is `-INFINITY` until the policy has an
/// estimate.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn purex_policy_recommend(
    policy: *const PurexPolicy,
    out_arm: *mut usize,
    out_mean: *mut f64,
) -> PurexStatus {
    guard(|| {
        let rec = borrow(policy, "policy")?.inner.recommend();
        if out_mean.is_null() {
            return Err(null("out_mean"));
        }
        out(out_arm, "out_arm", rec.arm)?;
        out(out_mean, "out_mean", rec.mean)
    })
}

/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn purex_simple_regret_bound(n: usize, budget: u64, out_value: *mut f64) -> PurexStatus {
    guard(|| out(out_value, "out_value", bounds::simple_regret_bound(n, budget)?))
}

/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn purex_err_bound_sh_m(
    n: usize,
    budget: u64,
    eps: f64,
    m: usize,
    const_c: f64,
    out_value: *mut f64,
    out_exponent: *mut f64,
) -> PurexStatus {
    guard(|| {
        let v = bounds::err_bound_sh_m(n, budget, eps, m, const_c)?;
        if out_exponent.is_null() {
            return Err(null("out_exponent"));
        }
        out(out_value, "out_value", v.value)?;
        out(out_exponent, "out_exponent", v.exponent)
    })
}

/// Brackets opened by step `t` and the closed-form sandwich around it.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn purex_brackets_open(
    t: u64,
    out_opened: *mut u32,
    out_lower: *mut f64,
    out_upper: *mut f64,
) -> PurexStatus {
    guard(|| {
        let b = bounds::brackets_open(t)?;
        if out_lower.is_null() || out_upper.is_null() {
            return Err(null("out_lower/out_upper"));
        }
        out(out_opened, "out_opened", b.opened)?;
        out(out_lower, "out_lower", b.lower)?;
        out(out_upper, "out_upper", b.upper)
    })
}

/// Runs an experiment described by a config JSON document and returns the
/// summary JSON. Relative instance paths resolve against the current
/// directory. Release the result with `purex_string_free`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn purex_simulate(config_json: *const c_char, out_json: *mut *mut c_char) -> PurexStatus {
    guard(|| {
        let config = ExperimentConfig::from_json(text(config_json, "config_json")?)?;
        let summary = Experiment::new(config, None)?.monte_carlo(None)?;
        let json = serde_json_string(&summary)?;
        out(out_json, "out_json", json.into_raw())
    })
}

fn serde_json_string(summary: &purex::harness::MetricsSummary) -> Result<CString, Fail> {
    let mut buf = Vec::new();
    purex::harness::write_summary_json(summary, &mut buf)?;
    CString::new(buf).map_err(|e| Fail(PurexStatus::Runtime, e.to_string()))
}

/// # Safety
/// `s` must come from a `purex_*` function that documents this release.
#[no_mangle]
pub unsafe extern "C" fn purex_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
