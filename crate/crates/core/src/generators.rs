//! Synthetic data for the two analyzed regimes (a doubling measure and a
//! Bernoulli topic model) plus the coordinate-split adversarial instance.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::linalg::{RngSeed, UnitDirection};

/// Uniform distribution on the unit ball of `R^{d_o}`, embedded in the first
/// `d_o` coordinates of `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingParams {
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    pub n: usize,
    pub seed: RngSeed,
}

impl DoublingParams {
    pub fn validate(&self) -> Result<()> {
        if self.intrinsic_dim == 0 {
            return Err(Error::param("intrinsic dimension must be >= 1"));
        }
        if self.ambient_dim < self.intrinsic_dim {
            return Err(Error::param(format!(
                "ambient dimension {} is below intrinsic dimension {}",
                self.ambient_dim, self.intrinsic_dim
            )));
        }
        if self.n == 0 {
            return Err(Error::param("n must be >= 1"));
        }
        Ok(())
    }
}

pub fn sample_doubling(params: &DoublingParams) -> Result<Dataset> {
    params.validate()?;
    let (d_o, d) = (params.intrinsic_dim, params.ambient_dim);
    let mut rng = params.seed.rng();
    let mut points = vec![0.0; params.n * d];
    for row in points.chunks_exact_mut(d) {
        let dir = UnitDirection::sample(d_o, &mut rng)?;
        let radius = rng.random::<f64>().powf(1.0 / d_o as f64);
        for (c, u) in row.iter_mut().zip(dir.as_slice()) {
            *c = radius * u;
        }
    }
    Dataset::with_provenance(points, d, "doubling", Provenance::Doubling(params.clone()))
}

/// Largest word probability produced by [`TopicModelParams::random`].
pub const MAX_WORD_PROB: f64 = 0.45;

/// A mixture of `t` Bernoulli product distributions over `{0,1}^N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicModelParams {
    pub vocab_size: usize,
    /// Mixing weights `w_j`, one per topic.
    pub weights: Vec<f64>,
    /// `word_probs[j][i]` is the probability that word `i` occurs in a
    /// document of topic `j`; each lies strictly inside `(0, 1/2)`.
    pub word_probs: Vec<Vec<f64>>,
    /// Number of documents to draw.
    pub n: usize,
    pub seed: RngSeed,
}

impl TopicModelParams {
    pub fn validate(&self) -> Result<()> {
        let t = self.weights.len();
        if t == 0 {
            return Err(Error::param("topic model needs at least one topic"));
        }
        if self.vocab_size == 0 {
            return Err(Error::param("vocabulary size must be >= 1"));
        }
        if self.word_probs.len() != t {
            return Err(Error::param(format!(
                "{} weight(s) but {} word-probability row(s)",
                t,
                self.word_probs.len()
            )));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param("topic weights must be finite and nonnegative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("topic weights sum to {total}, expected 1")));
        }
        for (j, row) in self.word_probs.iter().enumerate() {
            if row.len() != self.vocab_size {
                return Err(Error::param(format!(
                    "topic {j} has {} word probabilities, expected {}",
                    row.len(),
                    self.vocab_size
                )));
            }
            if let Some(i) = row.iter().position(|p| !(*p > 0.0 && *p < 0.5)) {
                return Err(Error::param(format!(
                    "word probability p[{j}][{i}] = {} must lie in (0, 1/2)",
                    row[i]
                )));
            }
        }
        Ok(())
    }

    pub fn topics(&self) -> usize {
        self.weights.len()
    }

    /// A random instance with `topics` equally weighted topics whose word
    /// probabilities are rescaled so that every topic has expected document
    /// length `target_length`.
    pub fn random(
        topics: usize,
        vocab_size: usize,
        target_length: f64,
        n: usize,
        seed: RngSeed,
    ) -> Result<Self> {
        if topics == 0 || vocab_size == 0 {
            return Err(Error::param("need at least one topic and one word"));
        }
        if !(target_length > 0.0 && target_length < 0.95 * MAX_WORD_PROB * vocab_size as f64) {
            return Err(Error::param(format!(
                "target length {target_length} must lie in (0, {})",
                0.95 * MAX_WORD_PROB * vocab_size as f64
            )));
        }
        let mut rng = seed.child(0).rng();
        let word_probs = (0..topics)
            .map(|_| {
                // Heavy-tailed raw word frequencies.
                let raw: Vec<f64> = (0..vocab_size)
                    .map(|_| rng.random_range(0.05f64..1.0).powi(3))
                    .collect();
                rescale_to_length(&raw, target_length)
            })
            .collect();
        Ok(TopicModelParams {
            vocab_size,
            weights: vec![1.0 / topics as f64; topics],
            word_probs,
            n,
            seed,
        })
    }
}

/// Scales `raw` to sum to `target`, capping entries at [`MAX_WORD_PROB`] and
/// redistributing the excess over the uncapped entries.
fn rescale_to_length(raw: &[f64], target: f64) -> Vec<f64> {
    let mut out = vec![0.0; raw.len()];
    let mut capped = vec![false; raw.len()];
    loop {
        let fixed: f64 = capped.iter().filter(|&&c| c).count() as f64 * MAX_WORD_PROB;
        let free: f64 = raw
            .iter()
            .zip(&capped)
            .filter(|(_, &c)| !c)
            .map(|(r, _)| r)
            .sum();
        let scale = (target - fixed) / free;
        let mut changed = false;
        for i in 0..raw.len() {
            if capped[i] {
                out[i] = MAX_WORD_PROB;
            } else {
                out[i] = raw[i] * scale;
                if out[i] > MAX_WORD_PROB {
                    capped[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return out;
        }
    }
}

/// Per-topic expected document lengths `L_j` and their minimum `L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedLengths {
    pub per_topic: Vec<f64>,
    pub min: f64,
}

pub fn expected_lengths(params: &TopicModelParams) -> Result<ExpectedLengths> {
    params.validate()?;
    let per_topic: Vec<f64> = params.word_probs.iter().map(|row| row.iter().sum()).collect();
    let min = per_topic.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ExpectedLengths { per_topic, min })
}

/// Draws `params.n` documents.
pub fn sample_topic_model(params: &TopicModelParams) -> Result<Dataset> {
    params.validate()?;
    let (points, labels) = draw_documents(params, params.n, &mut params.seed.child(1).rng())?;
    Dataset::with_provenance(
        points,
        params.vocab_size,
        "topic",
        Provenance::Topic {
            params: params.clone(),
            labels,
        },
    )
}

/// Draws `count` documents from the model using the stream `seed`;
/// used for query documents that are independent of the indexed corpus.
pub fn sample_topic_documents(
    params: &TopicModelParams,
    count: usize,
    seed: &RngSeed,
) -> Result<Dataset> {
    params.validate()?;
    let (points, labels) = draw_documents(params, count, &mut seed.rng())?;
    Dataset::with_provenance(
        points,
        params.vocab_size,
        "topic",
        Provenance::Topic {
            params: params.clone(),
            labels,
        },
    )
}

fn draw_documents<R: Rng>(
    params: &TopicModelParams,
    count: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<usize>)> {
    if count == 0 {
        return Err(Error::param("must draw at least one document"));
    }
    let topic = WeightedIndex::new(&params.weights)
        .map_err(|e| Error::param(format!("topic weights: {e}")))?;
    let n_words = params.vocab_size;
    let mut points = vec![0.0; count * n_words];
    let mut labels = Vec::with_capacity(count);
    for row in points.chunks_exact_mut(n_words) {
        let j = topic.sample(rng);
        labels.push(j);
        for (c, &p) in row.iter_mut().zip(&params.word_probs[j]) {
            if rng.random::<f64>() < p {
                *c = 1.0;
            }
        }
    }
    Ok((points, labels))
}

/// The all-ones point plus `n − 1` spiked points; see [`sample_adversarial`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarialParams {
    pub n: usize,
    pub dim: usize,
    /// Spike height `M`.
    pub spike: f64,
    pub seed: RngSeed,
}

impl AdversarialParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dim == 0 {
            return Err(Error::param("adversarial instance needs n >= 1 and d >= 1"));
        }
        if !(self.spike.is_finite() && self.spike > 1.0) {
            return Err(Error::param(format!("spike M = {} must exceed 1", self.spike)));
        }
        if self.spike * self.spike <= self.dim as f64 {
            return Err(Error::param(format!(
                "spike M = {} must satisfy M^2 > d = {} so the all-ones point is nearest to the origin",
                self.spike, self.dim
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdversarialInstance {
    pub data: Dataset,
    /// The origin; its nearest neighbor is row 0.
    pub query: Vec<f64>,
}

/// Row 0 is the all-ones vector. Every other row picks one coordinate
/// uniformly at random, sets it to `M`, and fills the rest with uniform
/// values in `(0, 1)`. Any axis-aligned projection puts most rows strictly
/// between the origin and row 0, while the rows are far from the origin in
/// Euclidean terms.
pub fn sample_adversarial(params: &AdversarialParams) -> Result<AdversarialInstance> {
    params.validate()?;
    let d = params.dim;
    let mut rng = params.seed.rng();
    let mut points = vec![1.0; params.n * d];
    for row in points.chunks_exact_mut(d).skip(1) {
        let spike = rng.random_range(0..d);
        for (j, c) in row.iter_mut().enumerate() {
            *c = if j == spike {
                params.spike
            } else {
                // Open interval (0, 1).
                loop {
                    let u: f64 = rng.random();
                    if u > 0.0 {
                        break u;
                    }
                }
            };
        }
    }
    let data = Dataset::with_provenance(
        points,
        d,
        "adversarial",
        Provenance::Adversarial(params.clone()),
    )?;
    Ok(AdversarialInstance {
        data,
        query: vec![0.0; d],
    })
}

/// Fraction of rows whose coordinate-`axis` value lies strictly between the
/// query's and the reference row's, averaged over all axes.
pub fn coordinate_separation_fraction(data: &Dataset, q: &[f64], reference: usize) -> Result<f64> {
    data.check_query(q)?;
    if reference >= data.len() {
        return Err(Error::param(format!("reference row {reference} out of range")));
    }
    let r = data.point(reference);
    let mut total = 0.0;
    for axis in 0..data.dim() {
        let (lo, hi) = if q[axis] <= r[axis] {
            (q[axis], r[axis])
        } else {
            (r[axis], q[axis])
        };
        let between = data
            .rows()
            .filter(|p| p[axis] > lo && p[axis] < hi)
            .count();
        total += between as f64 / data.len() as f64;
    }
    Ok(total / data.dim() as f64)
}
