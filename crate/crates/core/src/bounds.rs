//! Closed-form failure-probability and potential bounds.
//!
//! Tree bounds sum a per-level potential over the node sizes a query meets
//! on its way down, `m_i = floor(β^i n)` for `i = 0..=ℓ` with
//! `ℓ = ceil(log_{1/β}(n / n_o))`. Totals are clamped to 1 only at the end;
//! the unclamped value is kept alongside.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialProfile;
use crate::tree::TreeKind;

/// Node-size shrinkage per level of an RP tree, as used by its bound.
pub const RP_BETA: f64 = 0.75;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub kind: TreeKind,
    /// Absent for RP trees.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub n: usize,
    pub n_o: usize,
    pub k: usize,
    pub ell: usize,
}

/// A tree failure bound together with the per-level values it sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub params: BoundParams,
    /// Node sizes `m_i`, root first.
    pub levels: Vec<usize>,
    pub per_level_phi: Vec<f64>,
    /// Contribution of each level to the raw total (additive constants
    /// excluded).
    pub per_level_term: Vec<f64>,
    pub raw_total: f64,
    /// `min(1, raw_total)`.
    pub total: f64,
}

impl BoundReport {
    /// Line-oriented text table: a header block of `key value` pairs, then
    /// one row per level.
    pub fn to_table(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "kind {}", p.kind);
        if let Some(a) = p.alpha {
            let _ = writeln!(s, "alpha {a}");
        }
        let _ = writeln!(s, "beta {}", p.beta);
        let _ = writeln!(s, "n {}", p.n);
        let _ = writeln!(s, "n_o {}", p.n_o);
        let _ = writeln!(s, "k {}", p.k);
        let _ = writeln!(s, "ell {}", p.ell);
        let _ = writeln!(s, "raw_total {:.6e}", self.raw_total);
        let _ = writeln!(s, "total {:.6e}", self.total);
        let _ = writeln!(s, "{:>5} {:>12} {:>14} {:>14}", "level", "m", "phi", "term");
        for (i, ((m, phi), t)) in self
            .levels
            .iter()
            .zip(&self.per_level_phi)
            .zip(&self.per_level_term)
            .enumerate()
        {
            let _ = writeln!(s, "{i:>5} {m:>12} {phi:>14.6e} {t:>14.6e}");
        }
        s
    }
}

/// `ceil(log_{1/β}(n / n_o))`, or 0 when `n <= n_o`.
pub fn level_count(n: usize, n_o: usize, beta: f64) -> Result<usize> {
    if n_o == 0 || n == 0 {
        return Err(Error::param("n and n_o must be >= 1"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param(format!("beta must lie in (0,1), got {beta}")));
    }
    if n <= n_o {
        return Ok(0);
    }
    let x = (n as f64 / n_o as f64).ln() / (1.0 / beta).ln();
    let r = x.round();
    // Exact powers (n = n_o β^{-j}) must not pick up an extra level.
    Ok(if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    })
}

/// Node sizes `floor(β^i n)` for `i = 0..=ℓ`, raised to at least
/// `max(2, k+1)` so that `Φ_{k,m}` is defined at every level.
pub fn level_sizes(n: usize, n_o: usize, beta: f64, k: usize) -> Result<Vec<usize>> {
    let ell = level_count(n, n_o, beta)?;
    let floor_m = 2.max(k + 1);
    if n < floor_m {
        return Err(Error::param(format!("n = {n} too small for k = {k}")));
    }
    Ok((0..=ell)
        .map(|i| {
            let m = beta.powi(i as i32) * n as f64;
            let r = m.round();
            let m = if (m - r).abs() <= 1e-9 * m.max(1.0) { r } else { m.floor() };
            (m as usize).max(floor_m)
        })
        .collect())
}

/// The `β` a bound uses for a tree kind.
pub fn level_beta(kind: TreeKind, alpha: f64) -> f64 {
    match kind {
        TreeKind::Rp => RP_BETA,
        TreeKind::Spill => 0.5 + alpha,
        TreeKind::VirtualSpill => 0.5,
    }
}

fn levels_and_phi(
    profile: &PotentialProfile,
    n: usize,
    n_o: usize,
    beta: f64,
    k: usize,
) -> Result<(usize, Vec<usize>, Vec<f64>)> {
    if profile.k() != k {
        return Err(Error::param(format!(
            "profile was computed for k = {}, bound requested for k = {k}",
            profile.k()
        )));
    }
    let ell = level_count(n, n_o, beta)?;
    let levels = level_sizes(n, n_o, beta, k)?;
    let phi = levels.iter().map(|&m| profile.at(m)).collect::<Result<Vec<_>>>()?;
    Ok((ell, levels, phi))
}

/// Failure bound for spill and virtual spill trees: `(1/2α) Σ Φ_{m_i}` for
/// `k = 1` and `(k/α) Σ Φ_{k,m_i}` for `k > 1`, the latter requiring
/// `k <= α n_o / 2`.
pub fn spill_failure_bound(
    profile: &PotentialProfile,
    alpha: f64,
    n_o: usize,
    n: usize,
    kind: TreeKind,
    k: usize,
) -> Result<BoundReport> {
    if kind == TreeKind::Rp {
        return Err(Error::param("spill_failure_bound needs a spill or virtual-spill kind"));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::param(format!("alpha must lie in (0, 1/2), got {alpha}")));
    }
    if k == 0 {
        return Err(Error::param("k must be >= 1"));
    }
    if k > 1 && k as f64 > alpha * n_o as f64 / 2.0 {
        return Err(Error::param(format!(
            "k = {k} exceeds alpha * n_o / 2 = {}",
            alpha * n_o as f64 / 2.0
        )));
    }
    let beta = level_beta(kind, alpha);
    let (ell, levels, phi) = levels_and_phi(profile, n, n_o, beta, k)?;
    let scale = if k == 1 { 1.0 / (2.0 * alpha) } else { k as f64 / alpha };
    let per_level_term: Vec<f64> = phi.iter().map(|p| scale * p).collect();
    let raw_total: f64 = per_level_term.iter().sum();
    Ok(BoundReport {
        params: BoundParams {
            kind,
            alpha: Some(alpha),
            beta,
            n,
            n_o,
            k,
            ell,
        },
        levels,
        per_level_phi: phi,
        per_level_term,
        raw_total,
        total: raw_total.min(1.0),
    })
}

/// `x ln(2e/x)`, taken as 0 at `x = 0`. The function peaks at `x = 2`;
/// larger arguments are held at that peak so the bound stays monotone in
/// `x`, which only matters where the bound already exceeds 1.
pub fn x_log_2e_over_x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        let x = x.min(2.0);
        x * (2.0 * std::f64::consts::E / x).ln()
    }
}

/// Failure bound for RP trees (`β = 3/4`): `Σ Φ ln(2e/Φ)` for `k = 1` and
/// `2k Σ Φ_k ln(2e/(kΦ_k)) + 16(k−1)/n_o` for `k > 1`.
pub fn rp_failure_bound(
    profile: &PotentialProfile,
    n_o: usize,
    n: usize,
    k: usize,
) -> Result<BoundReport> {
    if k == 0 {
        return Err(Error::param("k must be >= 1"));
    }
    let (ell, levels, phi) = levels_and_phi(profile, n, n_o, RP_BETA, k)?;
    let (per_level_term, extra): (Vec<f64>, f64) = if k == 1 {
        (phi.iter().map(|&p| x_log_2e_over_x(p)).collect(), 0.0)
    } else {
        let kf = k as f64;
        (
            phi.iter().map(|&p| 2.0 * x_log_2e_over_x(kf * p)).collect(),
            16.0 * (kf - 1.0) / n_o as f64,
        )
    };
    let raw_total = per_level_term.iter().sum::<f64>() + extra;
    Ok(BoundReport {
        params: BoundParams {
            kind: TreeKind::Rp,
            alpha: None,
            beta: RP_BETA,
            n,
            n_o,
            k,
            ell,
        },
        levels,
        per_level_phi: phi,
        per_level_term,
        raw_total,
        total: raw_total.min(1.0),
    })
}

/// Dispatches to the bound matching a tree kind.
pub fn failure_bound(
    profile: &PotentialProfile,
    kind: TreeKind,
    alpha: f64,
    n_o: usize,
    n: usize,
    k: usize,
) -> Result<BoundReport> {
    match kind {
        TreeKind::Rp => rp_failure_bound(profile, n_o, n, k),
        _ => spill_failure_bound(profile, alpha, n_o, n, kind, k),
    }
}

fn check_delta(delta: f64, hi: f64) -> Result<()> {
    if delta > 0.0 && delta < hi {
        Ok(())
    } else {
        Err(Error::param(format!("delta must lie in (0, {hi}), got {delta}")))
    }
}

/// `max(k, ln 1/δ)`.
fn k_or_log(k: usize, delta: f64) -> f64 {
    (k as f64).max((1.0 / delta).ln())
}

/// Potential bound for data from a doubling measure of dimension `d_o`:
/// `6 (2 ln(1/δ) / m)^{1/d_o}` for `k = 1` and
/// `6 (8 max(k, ln 1/δ) / m)^{1/d_o}` for `k > 1`.
pub fn doubling_phi_bound(m: usize, d_o: f64, delta: f64, k: usize) -> Result<f64> {
    if !(d_o >= 2.0 && d_o.is_finite()) {
        return Err(Error::param(format!("d_o must be >= 2, got {d_o}")));
    }
    check_delta(delta, 0.5)?;
    if m < 2 || k == 0 {
        return Err(Error::param("need m >= 2 and k >= 1"));
    }
    let inner = if k == 1 {
        2.0 * (1.0 / delta).ln()
    } else {
        8.0 * k_or_log(k, delta)
    };
    Ok(6.0 * (inner / m as f64).powf(1.0 / d_o))
}

/// Potential bound for topic-model data: `4 √(v / (c_o L − log₂(n/m)))`.
pub fn topic_phi_bound(v: usize, length: f64, n: usize, m: usize, c_o: f64) -> Result<f64> {
    if m == 0 || m > n {
        return Err(Error::param(format!("m = {m} must lie in [1, n = {n}]")));
    }
    if !(c_o > 0.0 && length > 0.0) {
        return Err(Error::param("c_o and L must be positive"));
    }
    let denom = c_o * length - (n as f64 / m as f64).log2();
    if denom <= 0.0 {
        return Err(Error::param(format!(
            "c_o L - log2(n/m) = {denom} <= 0; the bound is vacuous"
        )));
    }
    Ok(4.0 * (v as f64 / denom).sqrt())
}

/// Largest `c_o` for which the topic bound still covers an observed
/// potential `phi` (the bound shrinks as `c_o` grows).
pub fn topic_c_o_ceiling(phi: f64, v: usize, length: f64, n: usize, m: usize) -> f64 {
    let log_term = (n as f64 / m as f64).log2();
    if phi <= 0.0 {
        return f64::INFINITY;
    }
    (16.0 * v as f64 / (phi * phi) + log_term) / length
}

fn check_summation(a: f64, b: f64, d_o: f64, beta: f64, n_o: usize) -> Result<()> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::param("A and B must be positive and finite"));
    }
    if !(d_o >= 1.0 && d_o.is_finite()) {
        return Err(Error::param(format!("d_o must be >= 1, got {d_o}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param(format!("beta must lie in (0,1), got {beta}")));
    }
    if n_o == 0 {
        return Err(Error::param("n_o must be >= 1"));
    }
    Ok(())
}

/// Closed-form bound on `Σ_i F(β^i n)` when `F(m) <= A (B/m)^{1/d_o}` for
/// `m >= n_o`: `(A d_o / (1−β)) (B/n_o)^{1/d_o}`. With `with_log` it bounds
/// `Σ F ln(2e/F)` instead, multiplying by
/// `ln(1/β)/(1−β) + ln(2e/A) + (1/d_o) ln(n_o/B)`; that form requires
/// `n_o >= B (A/2)^{d_o}`.
pub fn summation_lemma_bound(
    a: f64,
    b: f64,
    d_o: f64,
    beta: f64,
    n_o: usize,
    with_log: bool,
) -> Result<f64> {
    check_summation(a, b, d_o, beta, n_o)?;
    let n_of = n_o as f64;
    let plain = a * d_o / (1.0 - beta) * (b / n_of).powf(1.0 / d_o);
    if !with_log {
        return Ok(plain);
    }
    let need = b * (a / 2.0).powf(d_o);
    if n_of < need {
        return Err(Error::param(format!("log form needs n_o >= B (A/2)^d_o = {need}")));
    }
    let factor = (1.0 / beta).ln() / (1.0 - beta)
        + (2.0 * std::f64::consts::E / a).ln()
        + (n_of / b).ln() / d_o;
    Ok(plain * factor)
}

/// The sum the summation lemma bounds, evaluated term by term at its
/// extreme `F(n_o / β^i) = A (B β^i / n_o)^{1/d_o}` for `i = 0..=ell`.
pub fn summation_lemma_direct(
    a: f64,
    b: f64,
    d_o: f64,
    beta: f64,
    n_o: usize,
    ell: usize,
    with_log: bool,
) -> Result<f64> {
    check_summation(a, b, d_o, beta, n_o)?;
    Ok((0..=ell)
        .map(|i| {
            let f = a * (b * beta.powi(i as i32) / n_o as f64).powf(1.0 / d_o);
            if with_log {
                x_log_2e_over_x(f)
            } else {
                f
            }
        })
        .sum())
}

/// A bound before and after clamping to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub raw: f64,
    pub clamped: f64,
}

impl BoundValue {
    fn new(raw: f64) -> Self {
        BoundValue {
            raw,
            clamped: raw.min(1.0),
        }
    }
}

/// Which family of trees a doubling-measure failure bound covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundFamily {
    /// Spill and virtual spill trees.
    Spill,
    Rp,
}

/// Failure bound for doubling-measure data with the unspecified absolute
/// constant set to `c_o`:
/// spill `(c_o d_o k / α) (8 max(k, ln 1/δ) / n_o)^{1/d_o}` (needs
/// `k <= α n_o / 2`), RP `c_o k (d_o + ln n_o) (8 max(k, ln 1/δ) / n_o)^{1/d_o}`
/// (needs `n_o >= c_o (3k)^{d_o} max(k, ln 1/δ)`).
pub fn doubling_failure_bound(
    k: usize,
    d_o: f64,
    alpha: f64,
    n_o: usize,
    delta: f64,
    c_o: f64,
    family: BoundFamily,
) -> Result<BoundValue> {
    if !(c_o > 0.0 && c_o.is_finite()) {
        return Err(Error::param(format!("c_o must be positive, got {c_o}")));
    }
    let coefficient = doubling_failure_coefficient(k, d_o, alpha, n_o, delta, family)?;
    if family == BoundFamily::Rp {
        let need = c_o * (3.0 * k as f64).powf(d_o) * k_or_log(k, delta);
        if (n_o as f64) < need {
            return Err(Error::param(format!(
                "RP bound needs n_o >= c_o (3k)^d_o max(k, ln 1/delta) = {need}"
            )));
        }
    }
    Ok(BoundValue::new(c_o * coefficient))
}

/// [`doubling_failure_bound`] divided by `c_o`, without the RP proviso
/// (which depends on `c_o`). An observed failure rate divided by this is
/// the smallest `c_o` consistent with the observation.
pub fn doubling_failure_coefficient(
    k: usize,
    d_o: f64,
    alpha: f64,
    n_o: usize,
    delta: f64,
    family: BoundFamily,
) -> Result<f64> {
    if k == 0 || n_o == 0 {
        return Err(Error::param("k and n_o must be >= 1"));
    }
    if !(d_o >= 1.0 && d_o.is_finite()) {
        return Err(Error::param(format!("d_o must be >= 1, got {d_o}")));
    }
    check_delta(delta, 1.0)?;
    let kf = k as f64;
    let n_of = n_o as f64;
    let root = (8.0 * k_or_log(k, delta) / n_of).powf(1.0 / d_o);
    match family {
        BoundFamily::Spill => {
            if !(alpha > 0.0 && alpha < 0.5) {
                return Err(Error::param(format!("alpha must lie in (0, 1/2), got {alpha}")));
            }
            if kf > alpha * n_of / 2.0 {
                return Err(Error::param(format!(
                    "k = {k} exceeds alpha * n_o / 2 = {}",
                    alpha * n_of / 2.0
                )));
            }
            Ok(d_o * kf / alpha * root)
        }
        BoundFamily::Rp => Ok(kf * (d_o + n_of.ln()) * root),
    }
}

/// The same spill failure bound assembled from its parts: the doubling
/// potential bound written as `A (B/m)^{1/d_o}`, summed over levels by the
/// summation lemma and scaled as in [`spill_failure_bound`]. Unclamped.
pub fn spill_failure_bound_from_parts(
    k: usize,
    d_o: f64,
    alpha: f64,
    n_o: usize,
    delta: f64,
    kind: TreeKind,
) -> Result<f64> {
    if kind == TreeKind::Rp {
        return Err(Error::param("expected a spill or virtual-spill kind"));
    }
    check_delta(delta, 0.5)?;
    let b = if k == 1 {
        2.0 * (1.0 / delta).ln()
    } else {
        8.0 * k_or_log(k, delta)
    };
    let beta = level_beta(kind, alpha);
    let sum = summation_lemma_bound(6.0, b, d_o, beta, n_o, false)?;
    let scale = if k == 1 { 1.0 / (2.0 * alpha) } else { k as f64 / alpha };
    Ok(scale * sum)
}
