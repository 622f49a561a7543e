//! The potential function `Φ` and the three-point projection geometry it is
//! built from.
//!
//! For a query `q` and data sorted by distance from `q`
//! (`x(1), x(2), …`), `Φ_m` is the average over the `m` closest points of
//! `‖q − x(1)‖ / ‖q − x(i)‖` (with the nearest point itself contributing
//! nothing). Small `Φ` means the nearest neighbor is well separated, and the
//! failure probability of every tree in [`crate::tree`] is controlled by it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{check_dim, dot, norm, squared_distance, sub};

/// `|(q−x)·(y−x)| / (‖q−x‖ ‖y−x‖)`: 1 for collinear points, 0 when
/// `q − x` is orthogonal to `y − x`.
pub fn collinearity(q: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(q.len(), x.len())?;
    check_dim(q.len(), y.len())?;
    let qx = sub(q, x);
    let yx = sub(y, x);
    let denom = norm(&qx) * norm(&yx);
    if denom == 0.0 {
        return Err(Error::Degenerate(
            "collinearity needs x != q and y != x".into(),
        ));
    }
    Ok((dot(&qx, &yx).abs() / denom).min(1.0))
}

/// Exact probability, over a uniformly random unit direction `U`, that
/// `y·U` falls strictly between `q·U` and `x·U`. Requires
/// `‖q−x‖ <= ‖q−y‖`.
pub fn three_point_probability(q: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    let (ratio, coll) = three_point_terms(q, x, y)?;
    let arg = (ratio * (1.0 - coll * coll).max(0.0).sqrt()).clamp(-1.0, 1.0);
    Ok(arg.asin() / PI)
}

/// Lower and upper bounds sandwiching [`three_point_probability`]:
/// `(1/π)·r·√(1−coll²)` and `r/2` with `r = ‖q−x‖/‖q−y‖`.
pub fn three_point_bounds(q: &[f64], x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let (ratio, coll) = three_point_terms(q, x, y)?;
    let lower = ratio * (1.0 - coll * coll).max(0.0).sqrt() / PI;
    Ok((lower, 0.5 * ratio))
}

fn three_point_terms(q: &[f64], x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let coll = collinearity(q, x, y)?;
    let dqx = squared_distance(q, x).sqrt();
    let dqy = squared_distance(q, y).sqrt();
    if dqx > dqy {
        return Err(Error::Ordering(format!(
            "need ||q-x|| <= ||q-y||, got {dqx} > {dqy}"
        )));
    }
    Ok((dqx / dqy, coll))
}

/// Data indices sorted by increasing distance from a query, ties broken by
/// index.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborOrdering {
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborOrdering {
    pub fn new(data: &Dataset, q: &[f64]) -> Result<Self> {
        data.check_query(q)?;
        let dist: Vec<f64> = data.rows().map(|p| squared_distance(p, q).sqrt()).collect();
        Ok(Self::sorted(dist))
    }

    /// Builds an ordering directly from per-point distances (point `i` has
    /// distance `distances[i]`).
    pub fn from_distances(distances: Vec<f64>) -> Result<Self> {
        if distances.is_empty() {
            return Err(Error::Empty("neighbor ordering over no points"));
        }
        if let Some(i) = distances.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::param(format!("distance {i} is not a finite nonnegative value")));
        }
        Ok(Self::sorted(distances))
    }

    fn sorted(dist: Vec<f64>) -> Self {
        let mut indices: Vec<usize> = (0..dist.len()).collect();
        indices.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
        let distances = indices.iter().map(|&i| dist[i]).collect();
        NeighborOrdering { indices, distances }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    fn check_m(&self, k: usize, m: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::param("neighbor count k must be >= 1"));
        }
        if m <= k || m < 2 || m > self.len() {
            return Err(Error::param(format!(
                "m = {m} must satisfy max(2, k+1) <= m <= n = {} (k = {k})",
                self.len()
            )));
        }
        Ok(())
    }

    /// Mean of the `k` smallest distances.
    fn head_mean(&self, k: usize) -> f64 {
        self.distances[..k].iter().sum::<f64>() / k as f64
    }
}

/// `ratio = head / d`, with a point at distance zero from the query counting
/// as 1 (the supremum of the ratio).
#[inline]
fn ratio(head: f64, d: f64) -> f64 {
    if d == 0.0 {
        1.0
    } else {
        head / d
    }
}

/// `Φ_m(q, data)`.
pub fn phi(ordering: &NeighborOrdering, m: usize) -> Result<f64> {
    phi_k(ordering, 1, m)
}

/// `Φ_{k,m}(q, data)`: the `k`-neighbor generalization, which averages the
/// `k` nearest distances in the numerator and sums over `i = k+1 ..= m`.
pub fn phi_k(ordering: &NeighborOrdering, k: usize, m: usize) -> Result<f64> {
    ordering.check_m(k, m)?;
    let head = ordering.head_mean(k);
    let sum: f64 = ordering.distances[k..m].iter().map(|&d| ratio(head, d)).sum();
    Ok(sum / m as f64)
}

/// Upper bound `Φ_m / 2` on the expected fraction of the `m` nearest points
/// whose projection falls strictly between `q` and `x(1)`.
pub fn separated_fraction_expectation_bound(ordering: &NeighborOrdering, m: usize) -> Result<f64> {
    Ok(0.5 * phi(ordering, m)?)
}

/// Probability bound for a random projection pushing at least an `alpha`
/// fraction of the `m` nearest points between `q` and one of its `k`
/// nearest neighbors. For `k = 1` this is `Φ_m / (2α)` (Markov on the
/// expected separated fraction); for `k > 1` it is
/// `k / (2(α − (k−1)/m)) · Φ_{k,m}`, valid only when `k < α·m + 1`.
/// Clamped to `[0, 1]`.
pub fn separation_probability_bound(
    ordering: &NeighborOrdering,
    m: usize,
    alpha: f64,
    k: usize,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let raw = if k == 1 {
        phi(ordering, m)? / (2.0 * alpha)
    } else {
        if (k as f64) >= alpha * m as f64 + 1.0 {
            return Err(Error::param(format!(
                "k = {k} violates k < alpha*m + 1 = {}",
                alpha * m as f64 + 1.0
            )));
        }
        let slack = alpha - (k as f64 - 1.0) / m as f64;
        k as f64 / (2.0 * slack) * phi_k(ordering, k, m)?
    };
    Ok(raw.clamp(0.0, 1.0))
}

/// `Φ_{k,m}` evaluated over an increasing grid of `m` values for one query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialProfile {
    k: usize,
    m_grid: Vec<usize>,
    phi: Vec<f64>,
}

impl PotentialProfile {
    /// Evaluates `Φ_{k,m}` at every `m` in `m_grid` using one pass of
    /// cumulative sums.
    pub fn compute(ordering: &NeighborOrdering, k: usize, m_grid: &[usize]) -> Result<Self> {
        let mut grid = m_grid.to_vec();
        grid.sort_unstable();
        grid.dedup();
        if grid.is_empty() {
            return Err(Error::Empty("potential profile grid"));
        }
        for &m in &grid {
            ordering.check_m(k, m)?;
        }
        let head = ordering.head_mean(k);
        let top = *grid.last().unwrap();
        let mut phi = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        let mut next = grid.iter().peekable();
        for (i, &d) in ordering.distances[..top].iter().enumerate() {
            if i >= k {
                acc += ratio(head, d);
            }
            // Position i holds the (i+1)-th nearest point.
            while let Some(&&m) = next.peek() {
                if m == i + 1 {
                    phi.push(acc / m as f64);
                    next.next();
                } else {
                    break;
                }
            }
        }
        Ok(PotentialProfile { k, m_grid: grid, phi })
    }

    /// Builds a profile from precomputed values.
    pub fn from_values(k: usize, m_grid: Vec<usize>, phi: Vec<f64>) -> Result<Self> {
        if m_grid.len() != phi.len() || m_grid.is_empty() {
            return Err(Error::param("profile grid and values must be nonempty and of equal length"));
        }
        if m_grid.windows(2).any(|w| w[0] >= w[1]) || m_grid[0] < 2 {
            return Err(Error::param("profile grid must be strictly increasing and start at m >= 2"));
        }
        if let Some(v) = phi.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(Error::param(format!("profile value {v} outside [0,1]")));
        }
        Ok(PotentialProfile { k, m_grid, phi })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m_grid(&self) -> &[usize] {
        &self.m_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    /// `Φ` at `m`: exact when `m` is on the grid, otherwise linearly
    /// interpolated in `log m` between the neighboring grid points.
    pub fn at(&self, m: usize) -> Result<f64> {
        let (lo, hi) = (self.m_grid[0], self.m_grid[self.m_grid.len() - 1]);
        if m < lo || m > hi {
            return Err(Error::param(format!(
                "m = {m} outside profile range [{lo}, {hi}]"
            )));
        }
        match self.m_grid.binary_search(&m) {
            Ok(i) => Ok(self.phi[i]),
            Err(i) => {
                let (m0, m1) = (self.m_grid[i - 1] as f64, self.m_grid[i] as f64);
                let t = ((m as f64).ln() - m0.ln()) / (m1.ln() - m0.ln());
                Ok(self.phi[i - 1] + t * (self.phi[i] - self.phi[i - 1]))
            }
        }
    }
}

/// `count` integers spaced geometrically over `[lo, hi]` (deduplicated, so
/// possibly fewer than `count`).
pub fn log_grid(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count <= 1 || lo >= hi {
        return vec![hi.max(lo)];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut grid: Vec<usize> = (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            ((a + t * (b - a)).exp().round() as usize).clamp(lo, hi)
        })
        .collect();
    grid.dedup();
    grid
}
