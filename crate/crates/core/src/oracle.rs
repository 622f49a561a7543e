//! Exact reference computations: linear-scan k-NN and the Poisson-binomial
//! distribution of Hamming distances under the topic model.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::generators::TopicModelParams;
use crate::linalg::squared_distance;
use crate::tree::QueryResult;

/// Exact `k` nearest neighbors by a full scan, ties broken by index.
pub fn brute_force_knn(data: &Dataset, q: &[f64], k: usize) -> Result<QueryResult> {
    data.check_query(q)?;
    if k == 0 || k > data.len() {
        return Err(Error::param(format!(
            "k = {k} must lie in [1, n = {}]",
            data.len()
        )));
    }
    let mut all: Vec<(f64, usize)> = data
        .rows()
        .enumerate()
        .map(|(i, p)| (squared_distance(p, q), i))
        .collect();
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, by_dist);
        all.truncate(k);
    }
    all.sort_unstable_by(by_dist);
    Ok(QueryResult {
        indices: all.iter().map(|a| a.1).collect(),
        distances: all.iter().map(|a| a.0.sqrt()).collect(),
        leaves_visited: 0,
        points_scanned: data.len(),
        short_count: false,
    })
}

/// Distribution of a sum of independent Bernoulli variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonBinomial {
    probs: Vec<f64>,
    pmf: Vec<f64>,
    /// Mass above the last stored count; zero unless truncated.
    tail_mass: f64,
}

impl PoissonBinomial {
    /// Full pmf on `0..=N`.
    pub fn new(probs: &[f64]) -> Result<Self> {
        Self::truncated(probs, probs.len())
    }

    /// Pmf on `0..=max_count` only, in `O(N · max_count)` time. The mass of
    /// the discarded upper tail is tracked exactly.
    pub fn truncated(probs: &[f64], max_count: usize) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::param(format!("Bernoulli probability {p} outside (0, 1)")));
        }
        let (pmf, tail_mass) = convolve(probs, max_count.min(probs.len()));
        Ok(PoissonBinomial {
            probs: probs.to_vec(),
            pmf,
            tail_mass,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `Pr(Z <= l)`, for `l` within the stored range.
    pub fn cdf(&self, l: usize) -> f64 {
        self.pmf[..=l.min(self.pmf.len() - 1)].iter().sum()
    }

    /// `pmf[l+1] / pmf[l]`, or `None` outside the stored range or where
    /// `pmf[l]` underflows to zero.
    pub fn growth_ratio(&self, l: usize) -> Option<f64> {
        let (a, b) = (*self.pmf.get(l)?, *self.pmf.get(l + 1)?);
        (a > 0.0).then(|| b / a)
    }
}

pub fn poisson_binomial_pmf(probs: &[f64]) -> Result<PoissonBinomial> {
    PoissonBinomial::new(probs)
}

/// Adds one Bernoulli at a time; `pmf[l]` for `l <= top`, plus the mass
/// pushed past `top`.
fn convolve(probs: &[f64], top: usize) -> (Vec<f64>, f64) {
    let mut pmf = vec![0.0; top + 1];
    pmf[0] = 1.0;
    let mut tail = 0.0;
    let mut filled = 0;
    for &a in probs {
        if filled == top {
            tail += pmf[top] * a;
        }
        filled = (filled + 1).min(top);
        for l in (1..=filled).rev() {
            pmf[l] = pmf[l] * (1.0 - a) + pmf[l - 1] * a;
        }
        pmf[0] *= 1.0 - a;
    }
    (pmf, tail)
}

/// Lower bound on `pmf[l+1] / pmf[l]` for a sum of Bernoullis:
/// `(1/(l+1)) Σ r_i` over all but the `l` largest `r_i = a_i / (1 − a_i)`.
pub fn bernoulli_growth_lower_bound(probs: &[f64], l: usize) -> f64 {
    let mut r: Vec<f64> = probs.iter().map(|&a| a / (1.0 - a)).collect();
    r.sort_unstable_by(|a, b| b.total_cmp(a));
    r.iter().skip(l).sum::<f64>() / (l + 1) as f64
}

/// Lower bound `(L − l/2) / (l+1)` on the growth ratio of the Hamming
/// distance pmf when every word probability is below 1/2 and `L` is the
/// smallest expected document length.
pub fn topic_growth_lower_bound(min_length: f64, l: usize) -> f64 {
    (min_length - l as f64 / 2.0) / (l + 1) as f64
}

/// Per-coordinate probabilities that a document from a topic with word
/// probabilities `p` differs from `q`: `p_i` where `q_i = 0`, `1 − p_i`
/// where `q_i = 1`.
pub fn hamming_flip_probs(q: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    if q.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    q.iter()
        .zip(p)
        .map(|(&qi, &pi)| {
            if qi == 0.0 {
                Ok(pi)
            } else if qi == 1.0 {
                Ok(1.0 - pi)
            } else {
                Err(Error::param(format!("query entry {qi} is not binary")))
            }
        })
        .collect()
}

/// Exact pmf of `d_H(q, X)` for `X` drawn from the topic mixture, on
/// `0..=N`.
pub fn hamming_distance_distribution(q: &[f64], params: &TopicModelParams) -> Result<Vec<f64>> {
    params.validate()?;
    let mut out = vec![0.0; params.vocab_size + 1];
    for (w, p) in params.weights.iter().zip(&params.word_probs) {
        if *w == 0.0 {
            continue;
        }
        let pb = PoissonBinomial::new(&hamming_flip_probs(q, p)?)?;
        for (o, v) in out.iter_mut().zip(pb.pmf()) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// Smallest `v` with `Pr(d_H(q, X) <= v) >= (8/n) max(k, ln 1/δ)`.
pub fn compute_v(
    q: &[f64],
    params: &TopicModelParams,
    n: usize,
    k: usize,
    delta: f64,
) -> Result<usize> {
    if n == 0 || k == 0 {
        return Err(Error::param("n and k must be >= 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0,1), got {delta}")));
    }
    let threshold = 8.0 / n as f64 * (k as f64).max((1.0 / delta).ln());
    if threshold > 1.0 {
        return Err(Error::param(format!(
            "mass threshold {threshold} exceeds 1; n = {n} is too small"
        )));
    }
    let pmf = hamming_distance_distribution(q, params)?;
    let mut cdf = 0.0;
    for (v, p) in pmf.iter().enumerate() {
        cdf += p;
        if cdf >= threshold {
            return Ok(v);
        }
    }
    // Rounding can leave the full sum a hair under a threshold of 1.
    Ok(params.vocab_size)
}
