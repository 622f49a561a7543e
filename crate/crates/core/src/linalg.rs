//! Vector primitives shared by the trees, the potential function and the
//! oracles: seeded random directions, projections, order statistics and
//! Euclidean distances.
//!
//! Points are plain `&[f64]` slices. Finiteness is checked once when data
//! enters the crate (see [`crate::Dataset`]) and when a query is issued.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the norm of a [`UnitDirection`].
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

/// A seed plus a path of child indices naming one independent random
/// stream.
///
/// Every `(seed, path)` pair maps to its own generator, so a tree node can
/// derive its randomness from its position alone and sibling subtrees can be
/// built in any order (or in parallel) with identical results.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    path: Vec<u64>,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed {
            seed,
            path: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// The stream one level below this one.
    pub fn child(&self, index: u64) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(index);
        RngSeed {
            seed: self.seed,
            path,
        }
    }

    /// A plain 64-bit seed drawn from this stream, for APIs that take one.
    pub fn derive_u64(&self) -> u64 {
        self.rng().random::<u64>()
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = splitmix64(self.seed);
        for &step in &self.path {
            key = splitmix64(key ^ splitmix64(step.wrapping_add(0xA076_1D64_78BD_642F)));
        }
        // Mix the path length in so that [] and [0] differ even if the
        // mixing above happened to collide.
        key = splitmix64(key ^ self.path.len() as u64);
        ChaCha8Rng::seed_from_u64(key)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A direction on the unit sphere `S^{d-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitDirection(Vec<f64>);

impl UnitDirection {
    /// Wraps `coords`, checking that it has unit norm within
    /// [`UNIT_NORM_TOLERANCE`].
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension("direction must have d >= 1".into()));
        }
        ensure_finite(&coords, "direction")?;
        let norm = norm(&coords);
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::param(format!("direction has norm {norm}, expected 1")));
        }
        Ok(UnitDirection(coords))
    }

    /// Draws a direction uniformly from the sphere by normalizing a standard
    /// Gaussian vector.
    pub fn sample<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("direction must have d >= 1".into()));
        }
        let mut coords = vec![0.0; dim];
        loop {
            for c in coords.iter_mut() {
                *c = rng.sample(StandardNormal);
            }
            let n = norm(&coords);
            // A zero Gaussian vector has probability zero; redraw if it happens.
            if n > 0.0 && n.is_finite() {
                coords.iter_mut().for_each(|c| *c /= n);
                return Ok(UnitDirection(coords));
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `x · u` without a dimension check.
    #[inline]
    pub(crate) fn project_one(&self, x: &[f64]) -> f64 {
        dot(x, &self.0)
    }
}

/// A uniformly random unit direction drawn from the stream named by `seed`.
pub fn random_unit_direction(dim: usize, seed: &RngSeed) -> Result<UnitDirection> {
    UnitDirection::sample(dim, &mut seed.rng())
}

/// Dot products `points[i] · u`.
pub fn project<P: AsRef<[f64]>>(points: &[P], u: &UnitDirection) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            let p = p.as_ref();
            check_dim(u.dim(), p.len())?;
            Ok(u.project_one(p))
        })
        .collect()
}

/// The β-fractile of `values`: the order statistic at (1-indexed) rank
/// `ceil(β·n)`. Never interpolated, so the result is always an element of
/// `values`.
pub fn fractile_value(values: &[f64], beta: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("fractile of an empty sequence"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param(format!("fractile beta must lie in (0,1), got {beta}")));
    }
    let n = values.len();
    let rank = ((beta * n as f64).ceil() as usize).clamp(1, n);
    let mut scratch = values.to_vec();
    let (_, v, _) = scratch.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok(*v)
}

/// The threshold `t` for which exactly `below` of `values` satisfy `x < t`
/// when the values are distinct: the order statistic at rank `below + 1`,
/// or `-inf` / `+inf` when `below` is 0 / `n`. Reorders `scratch`.
pub(crate) fn split_threshold(scratch: &mut [f64], below: usize) -> f64 {
    let n = scratch.len();
    if below == 0 {
        f64::NEG_INFINITY
    } else if below >= n {
        f64::INFINITY
    } else {
        let (_, v, _) = scratch.select_nth_unstable_by(below, f64::total_cmp);
        *v
    }
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    Ok(squared_distance(a, b).sqrt())
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(format!("{what}[{i}]"))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn one_dimensional_direction_is_a_sign() {
        for s in 0..50 {
            let u = random_unit_direction(1, &RngSeed::new(s)).unwrap();
            let c = u.as_slice()[0];
            assert!(c == 1.0 || c == -1.0, "got {c}");
        }
    }

    #[test]
    fn zero_dimension_is_rejected() {
        assert!(matches!(
            random_unit_direction(0, &RngSeed::new(1)),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn directions_have_unit_norm() {
        for s in 0..100 {
            let u = random_unit_direction(3, &RngSeed::new(s)).unwrap();
            assert!((norm(u.as_slice()) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn planar_directions_are_centered() {
        let draws = 100_000;
        let mut rng = RngSeed::new(2024).rng();
        let mut sum = [0.0f64; 2];
        for _ in 0..draws {
            let u = UnitDirection::sample(2, &mut rng).unwrap();
            sum[0] += u.as_slice()[0];
            sum[1] += u.as_slice()[1];
        }
        let tol = 4.0 / (draws as f64).sqrt();
        for s in sum {
            assert!((s / draws as f64).abs() < tol);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = random_unit_direction(8, &RngSeed::new(5).child(1).child(0)).unwrap();
        let b = random_unit_direction(8, &RngSeed::new(5).child(1).child(0)).unwrap();
        let c = random_unit_direction(8, &RngSeed::new(5).child(0).child(1)).unwrap();
        let root = random_unit_direction(8, &RngSeed::new(5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, root);
    }

    #[test]
    fn projection_examples() {
        let e1 = UnitDirection::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(project(&[[3.0, 4.0]], &e1).unwrap(), vec![3.0]);
        let diag = UnitDirection::new(vec![1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()]).unwrap();
        assert_eq!(project(&[[0.0, 0.0]], &diag).unwrap(), vec![0.0]);
        let p = project(&[[1.0, 1.0]], &diag).unwrap()[0];
        assert!((p - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            project(&[[1.0, 1.0, 1.0]], &diag),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unit_direction_rejects_bad_norm() {
        assert!(UnitDirection::new(vec![1.0, 1.0]).is_err());
        assert!(UnitDirection::new(vec![]).is_err());
        assert!(UnitDirection::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn fractile_examples() {
        assert_eq!(fractile_value(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.0);
        assert_eq!(fractile_value(&[7.0], 0.3).unwrap(), 7.0);
        assert_eq!(fractile_value(&[5.0, 1.0, 9.0, 3.0, 7.0], 0.75).unwrap(), 7.0);
        assert!(matches!(fractile_value(&[], 0.5), Err(Error::Empty(_))));
        assert!(fractile_value(&[1.0], 0.0).is_err());
        assert!(fractile_value(&[1.0], 1.0).is_err());
    }

    #[test]
    fn split_threshold_counts() {
        let mut v = vec![4.0, 1.0, 3.0, 2.0];
        assert_eq!(split_threshold(&mut v, 0), f64::NEG_INFINITY);
        assert_eq!(split_threshold(&mut v, 2), 3.0);
        assert_eq!(split_threshold(&mut v, 4), f64::INFINITY);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(euclidean_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        // Binary vectors differing in h coordinates sit at distance sqrt(h).
        let a = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
        let b = [0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        assert_eq!(euclidean_distance(&a, &b).unwrap(), 3f64.sqrt());
        assert!(euclidean_distance(&[0.0], &[0.0, 1.0]).is_err());
    }

    fn random_rotation(d: usize, seed: u64) -> Vec<Vec<f64>> {
        // Gram-Schmidt on Gaussian vectors.
        let mut rng = RngSeed::new(seed).rng();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        while basis.len() < d {
            let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let n = norm(&v);
            if n > 1e-6 {
                basis.push(v.into_iter().map(|x| x / n).collect());
            }
        }
        basis
    }

    proptest! {
        #[test]
        fn fractile_is_an_element(values in prop::collection::vec(-1e6f64..1e6, 1..60), beta in 0.01f64..0.99) {
            let v = fractile_value(&values, beta).unwrap();
            prop_assert!(values.contains(&v));
            let below = values.iter().filter(|&&x| x < v).count();
            prop_assert!(below <= (beta * values.len() as f64).ceil() as usize);
        }

        #[test]
        fn projection_is_linear(
            x in prop::collection::vec(-100f64..100.0, 5),
            y in prop::collection::vec(-100f64..100.0, 5),
            a in -10f64..10.0,
            b in -10f64..10.0,
            seed in any::<u64>(),
        ) {
            let u = random_unit_direction(5, &RngSeed::new(seed)).unwrap();
            let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let lhs = project(&[combo], &u).unwrap()[0];
            let px = project(&[x], &u).unwrap()[0];
            let py = project(&[y], &u).unwrap()[0];
            let rhs = a * px + b * py;
            let scale = (a.abs() * px.abs() + b.abs() * py.abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * scale);
        }

        #[test]
        fn distance_is_rotation_invariant(
            x in prop::collection::vec(-10f64..10.0, 6),
            y in prop::collection::vec(-10f64..10.0, 6),
            seed in any::<u64>(),
        ) {
            let rot = random_rotation(6, seed);
            let apply = |v: &[f64]| rot.iter().map(|row| dot(row, v)).collect::<Vec<_>>();
            let before = euclidean_distance(&x, &y).unwrap();
            let after = euclidean_distance(&apply(&x), &apply(&y)).unwrap();
            prop_assert!((before - after).abs() <= 1e-9 * before.max(1.0));
        }

        #[test]
        fn distance_is_symmetric(
            x in prop::collection::vec(-10f64..10.0, 4),
            y in prop::collection::vec(-10f64..10.0, 4),
        ) {
            prop_assert_eq!(euclidean_distance(&x, &y).unwrap(), euclidean_distance(&y, &x).unwrap());
        }
    }
}
