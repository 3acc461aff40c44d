//! Closed-form error, regret and sample-complexity bounds.
//!
//! The unspecified absolute constants of the theory are exposed as `const_c`.
//! Values are shape references, not certified envelopes.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::algorithms::brackets_open_at;
use crate::error::{Error, Result};
use crate::instance::GapProfile;

/// `ln(4e)`.
pub const LN_4E: f64 = 1.0 + 2.0 * LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    /// Probability bound clamped to `[0, 1]`.
    pub value: f64,
    /// Argument of the leading `exp(.)` before clamping.
    pub exponent: f64,
}

impl BoundValue {
    fn from_parts(prefactor: f64, exponent: f64) -> Self {
        let raw = prefactor * exponent.exp();
        BoundValue {
            value: if raw.is_nan() { 1.0 } else { raw.clamp(0.0, 1.0) },
            exponent,
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")))
    }
}

fn check_const(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("const_c must be positive, got {c}")))
    }
}

/// Shared form of the SH bounds:
/// `log2 n * exp(-c m (eps^2 T / (scale n log2^2(2m) log2 n) - ln(4e)))`.
fn sh_form(n: usize, budget: f64, eps: f64, m: usize, const_c: f64, scale: f64) -> BoundValue {
    if n <= 1 {
        return BoundValue {
            value: 0.0,
            exponent: f64::NEG_INFINITY,
        };
    }
    let log2n = (n as f64).log2();
    let l2m = (2.0 * m as f64).log2();
    let inner = eps * eps * budget / (scale * n as f64 * l2m * l2m * log2n) - LN_4E;
    BoundValue::from_parts(log2n, -const_c * m as f64 * inner)
}

/// Error bound for SH returning an arm worse than `mu_m - eps`.
pub fn err_bound_sh_m(n: usize, budget: u64, eps: f64, m: usize, const_c: f64) -> Result<BoundValue> {
    check_eps(eps)?;
    check_const(const_c)?;
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("m must lie in [1, n], got m={m}, n={n}")));
    }
    Ok(sh_form(n, budget as f64, eps, m, const_c, 4.0))
}

/// Minimum over candidate `(m', eps')` with `Delta_{m'} + eps' <= eps`. Returns
/// the bound together with the minimizing `m'` (1-based).
fn min_over_good_sets(gaps: &GapProfile, eps: f64, per_m: impl Fn(usize, f64) -> BoundValue) -> (BoundValue, usize) {
    let mut best: Option<(BoundValue, usize)> = None;
    for (idx, &gap) in gaps.gaps().iter().enumerate() {
        if gap >= eps {
            break;
        }
        let v = per_m(idx + 1, eps - gap);
        match best {
            Some((b, _)) if v.value > b.value || (v.value == b.value && v.exponent >= b.exponent) => {}
            _ => best = Some((v, idx + 1)),
        }
    }
    best.expect("the best arm has gap 0 < eps")
}

/// SH error bound at the best achievable `(m', eps')` for this gap profile.
pub fn err_bound_sh(gaps: &GapProfile, budget: u64, eps: f64, const_c: f64) -> Result<BoundValue> {
    check_eps(eps)?;
    check_const(const_c)?;
    let n = gaps.n();
    Ok(min_over_good_sets(gaps, eps, |m, e| sh_form(n, budget as f64, e, m, const_c, 4.0)).0)
}

/// Same as [`err_bound_sh`] but also reports the minimizing `m'`.
pub fn err_bound_sh_argmin(gaps: &GapProfile, budget: u64, eps: f64, const_c: f64) -> Result<(BoundValue, usize)> {
    check_eps(eps)?;
    check_const(const_c)?;
    let n = gaps.n();
    Ok(min_over_good_sets(gaps, eps, |m, e| sh_form(n, budget as f64, e, m, const_c, 4.0)))
}

/// Anytime error bound for doubling SH at time `t` (a quarter of the budget
/// is guaranteed to the latest finished run).
pub fn err_bound_dsh(gaps: &GapProfile, t: u64, eps: f64, const_c: f64) -> Result<BoundValue> {
    check_eps(eps)?;
    check_const(const_c)?;
    let n = gaps.n();
    Ok(min_over_good_sets(gaps, eps, |m, e| sh_form(n, t as f64, e, m, const_c, 16.0)).0)
}

/// `(sqrt(pi)/2) sqrt(n/T)`.
pub fn simple_regret_bound(n: usize, budget: u64) -> Result<f64> {
    if n == 0 || budget == 0 {
        return Err(Error::InvalidArgument("n and T must be at least 1".into()));
    }
    Ok(PI.sqrt() / 2.0 * (n as f64 / budget as f64).sqrt())
}

/// Rate `min{max_{i <= m(eps/2)} i Delta^2_{i, m(eps/2)+1} / n, eps^2}`, or
/// `None` when every arm is `eps/2`-good.
pub fn bsh_rate(gaps: &GapProfile, eps: f64) -> Option<f64> {
    let n = gaps.n();
    let m = gaps.m_eps(eps / 2.0);
    if m >= n {
        return None;
    }
    let best = (1..=m)
        .map(|i| {
            let d = gaps.pairwise(i - 1, m);
            i as f64 * d * d / n as f64
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Some(best.min(eps * eps))
}

/// `exp(-c * rate * t / ln t)` for bracketing SH.
pub fn err_bound_bsh(gaps: &GapProfile, eps: f64, t: u64, const_c: f64) -> Result<BoundValue> {
    check_eps(eps)?;
    check_const(const_c)?;
    if t < 2 {
        return Err(Error::InvalidArgument("t must be at least 2".into()));
    }
    Ok(match bsh_rate(gaps, eps) {
        None => BoundValue {
            value: 0.0,
            exponent: f64::NEG_INFINITY,
        },
        Some(rate) => BoundValue::from_parts(1.0, -const_c * rate * t as f64 / (t as f64).ln()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketCount {
    pub opened: u32,
    pub lower: f64,
    pub upper: f64,
}

/// Brackets opened by step `t` with the closed-form sandwich
/// `0.63 log2(1 + t ln 2) < L_t <= 1 + log2(1 + t ln 2)`.
pub fn brackets_open(t: u64) -> Result<BracketCount> {
    if t == 0 {
        return Err(Error::InvalidArgument("t must be at least 1".into()));
    }
    let base = (1.0 + LN_2 * t as f64).log2();
    Ok(BracketCount {
        opened: brackets_open_at(t),
        lower: 0.63 * base,
        upper: 1.0 + base,
    })
}

/// Guaranteed pulls per older bracket by step `t`: `t / (4 ln t) - L_t`.
pub fn bracket_pull_floor(t: u64) -> f64 {
    let t_f = t as f64;
    t_f / (4.0 * t_f.ln()) - brackets_open_at(t) as f64
}

/// `H_2 = max_{i >= 2} i / Delta_i^2` over sorted gaps.
pub fn hardness_h2(gaps: &GapProfile) -> Result<f64> {
    let g = gaps.gaps();
    if g.len() < 2 {
        return Err(Error::InvalidArgument("H2 needs at least two arms".into()));
    }
    if g.iter().all(|&d| d == 0.0) {
        return Err(Error::InvalidArgument("H2 is undefined when all gaps are zero".into()));
    }
    Ok(g.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &d)| (i + 1) as f64 / (d * d))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `C(n, k)` as a float.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Bound on `P(at most k of the s arms chosen by uniform sampling are
/// (m', eps)-good)` with `top` arms that are `(m', eps)`-good:
/// `C(m', m'-k) e^{-(m'-k) x} + C(n - top, s - k) e^{-(s-k) x}`,
/// `x = eps^2 T / (2n)`. Not clamped.
pub fn uniform_top_s_bound(n: usize, m_prime: usize, top: usize, s: usize, k: usize, eps: f64, budget: u64) -> f64 {
    let x = eps * eps * budget as f64 / (2.0 * n as f64);
    let a = m_prime.saturating_sub(k) as u64;
    let b = s.saturating_sub(k) as u64;
    binomial(m_prime as u64, a) * (-(a as f64) * x).exp() + binomial((n - top) as u64, b) * (-(b as f64) * x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableInstance {
    /// `Delta_i = i / n`.
    Linear,
    /// `m` good arms, the rest `eps`-bad.
    EqualGap,
}

/// Order-of-magnitude sample complexities for finding an `eps`-good arm
/// with probability `1 - delta`, all constants set to 1 and natural log.
pub fn sample_complexity_table(
    kind: TableInstance,
    n: usize,
    m: usize,
    eps: f64,
    delta: f64,
) -> Result<BTreeMap<&'static str, f64>> {
    check_eps(eps)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    if kind == TableInstance::EqualGap && (m == 0 || m > n) {
        return Err(Error::InvalidArgument(format!("m must lie in [1, n], got m={m}, n={n}")));
    }
    let (n, m, e2) = (n as f64, m as f64, eps * eps);
    let l = (1.0 / delta).ln();
    let mut t = BTreeMap::new();
    t.insert("ME", n / e2 * l);
    match kind {
        TableInstance::Linear => {
            t.insert("P3", (l / eps + l * l) / e2);
            t.insert("BUCB", n / eps * l);
            t.insert("DSH", (l / (e2 * eps)).max(n / e2));
            t.insert("BSH", l / (e2 * eps));
        }
        TableInstance::EqualGap => {
            t.insert("P3", (n / m * l + l * l) / e2);
            t.insert("BUCB", n / (m * e2) * l);
            t.insert("DSH", (n / (m * e2) * l).max(n / e2));
            t.insert("BSH", n / (m * e2) * l);
        }
    }
    Ok(t)
}

/// One evaluated bound for tabular export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub bound: String,
    /// Inputs as `key=value` pairs separated by `;`.
    pub params: String,
    pub value: f64,
    pub exponent: Option<f64>,
}

impl BoundRow {
    pub fn new(bound: &str, params: &[(&str, String)], value: f64, exponent: Option<f64>) -> Self {
        BoundRow {
            bound: bound.to_string(),
            params: params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";"),
            value,
            exponent,
        }
    }
}

/// Writes rows as CSV with header `bound,params,value,exponent`.
pub fn write_bound_rows<W: Write>(rows: &[BoundRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["bound", "params", "value", "exponent"])?;
    for r in rows {
        w.write_record([
            r.bound.clone(),
            r.params.clone(),
            r.value.to_string(),
            r.exponent.map(|e| e.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))?;
    Ok(())
}
