//! Monte Carlo estimators over random projection directions, used to check
//! the closed-form probabilities against simulation.
//!
//! Directions are unnormalized standard Gaussians: "strictly between" is
//! unchanged by positive scaling, and the Gaussian is rotation invariant.
//! Work is split into fixed chunks, each with its own seed stream, and the
//! chunk results are merged in order, so estimates do not depend on the
//! thread count.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{check_dim, dot, RngSeed};
use crate::potential::NeighborOrdering;

const CHUNK: u64 = 1 << 14;

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: u64,
}

fn estimate<F>(dim: usize, samples: u64, seed: &RngSeed, value: F) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if samples == 0 {
        return Err(Error::param("need at least one sample"));
    }
    if dim == 0 {
        return Err(Error::InvalidDimension("dimension must be >= 1".into()));
    }
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.child(c).rng();
            let count = CHUNK.min(samples - c * CHUNK);
            let mut u = vec![0.0; dim];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                for x in u.iter_mut() {
                    *x = rng.sample(StandardNormal);
                }
                let v = value(&u);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let n = samples as f64;
    let mean = s / n;
    let var = if samples > 1 {
        ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(Estimate {
        mean,
        standard_error: (var / n).sqrt(),
        samples,
    })
}

#[inline]
fn strictly_between(v: f64, a: f64, b: f64) -> bool {
    (a < v && v < b) || (b < v && v < a)
}

/// Frequency with which `y·U` falls strictly between `q·U` and `x·U`.
pub fn betweenness_frequency(
    q: &[f64],
    x: &[f64],
    y: &[f64],
    samples: u64,
    seed: &RngSeed,
) -> Result<Estimate> {
    check_dim(q.len(), x.len())?;
    check_dim(q.len(), y.len())?;
    estimate(q.len(), samples, seed, |u| {
        let (a, b, c) = (dot(q, u), dot(x, u), dot(y, u));
        f64::from(u8::from(strictly_between(c, a, b)))
    })
}

/// The `m` nearest points to `q`, in order, copied into one buffer.
fn nearest_block(data: &Dataset, q: &[f64], m: usize) -> Result<Vec<f64>> {
    let ordering = NeighborOrdering::new(data, q)?;
    if m < 2 || m > ordering.len() {
        return Err(Error::param(format!(
            "m = {m} must lie in [2, n = {}]",
            ordering.len()
        )));
    }
    Ok(ordering.indices()[..m]
        .iter()
        .flat_map(|&i| data.point(i).iter().copied())
        .collect())
}

/// Mean fraction of the `m` nearest points whose projection falls strictly
/// between `q` and its nearest neighbor.
pub fn separated_fraction(
    data: &Dataset,
    q: &[f64],
    m: usize,
    samples: u64,
    seed: &RngSeed,
) -> Result<Estimate> {
    let block = nearest_block(data, q, m)?;
    let d = data.dim();
    estimate(d, samples, seed, |u| {
        let a = dot(q, u);
        let mut rows = block.chunks_exact(d);
        let b = dot(rows.next().unwrap(), u);
        let inside = rows.filter(|r| strictly_between(dot(r, u), a, b)).count();
        inside as f64 / m as f64
    })
}

/// Frequency of the event that, for some `j <= k`, at least `alpha·m` of
/// the `m` nearest points project strictly between `q` and its `j`-th
/// nearest neighbor.
pub fn knn_separation_frequency(
    data: &Dataset,
    q: &[f64],
    m: usize,
    alpha: f64,
    k: usize,
    samples: u64,
    seed: &RngSeed,
) -> Result<Estimate> {
    if k == 0 || k >= m {
        return Err(Error::param(format!("k = {k} must lie in [1, m)")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let block = nearest_block(data, q, m)?;
    let d = data.dim();
    let need = alpha * m as f64;
    estimate(d, samples, seed, |u| {
        let a = dot(q, u);
        let proj: Vec<f64> = block.chunks_exact(d).map(|r| dot(r, u)).collect();
        let hit = proj[..k].iter().any(|&b| {
            proj.iter().filter(|&&p| strictly_between(p, a, b)).count() as f64 >= need
        });
        f64::from(u8::from(hit))
    })
}
