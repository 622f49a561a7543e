use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{AdversarialParams, DoublingParams, TopicModelParams};
use crate::linalg::ensure_finite;

/// Where a dataset came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum Provenance {
    External,
    Doubling(DoublingParams),
    Topic {
        params: TopicModelParams,
        /// Topic drawn for each document, in row order.
        labels: Vec<usize>,
    },
    Adversarial(AdversarialParams),
}

/// `n` points in `R^d`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    dim: usize,
    kind_tag: String,
    provenance: Provenance,
}

impl Dataset {
    /// Builds a dataset from a row-major buffer, rejecting empty data and
    /// non-finite entries.
    pub fn new(points: Vec<f64>, dim: usize) -> Result<Self> {
        Self::with_provenance(points, dim, "external", Provenance::External)
    }

    pub fn with_provenance(
        points: Vec<f64>,
        dim: usize,
        kind_tag: impl Into<String>,
        provenance: Provenance,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("dataset dimension must be >= 1".into()));
        }
        if points.is_empty() {
            return Err(Error::Empty("dataset has no points"));
        }
        if !points.len().is_multiple_of(dim) {
            return Err(Error::param(format!(
                "buffer of {} values is not a multiple of dimension {dim}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("row {} column {}", i / dim, i % dim)));
        }
        let n = points.len() / dim;
        Ok(Dataset {
            points,
            n,
            dim,
            kind_tag: kind_tag.into(),
            provenance,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut points = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::param(format!(
                    "row {i} has {} columns, expected {dim}",
                    r.len()
                )));
            }
            points.extend_from_slice(r);
        }
        Self::new(points, dim)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn kind_tag(&self) -> &str {
        &self.kind_tag
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// True when every entry is 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.points.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Validates a query vector against this dataset.
    pub fn check_query(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: q.len(),
            });
        }
        ensure_finite(q, "query")
    }
}
