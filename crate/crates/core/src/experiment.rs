//! End-to-end failure-rate experiments: generate (or load) data, build
//! independent trees, answer queries defeatist-style and compare against the
//! exact answer, alongside the bound computed from each query's potential
//! profile.
//!
//! Seed streams: data from `seed/0`, queries from `seed/1`, tree `t` from
//! `seed/2/t`. Trials run in parallel and are merged in trial order, so the
//! report depends only on the config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    doubling_failure_bound, doubling_failure_coefficient, failure_bound, level_beta, level_sizes, BoundFamily, BoundValue,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::generators::{
    sample_adversarial, sample_doubling, sample_topic_documents, sample_topic_model,
    AdversarialParams, DoublingParams, TopicModelParams,
};
use crate::io::{load_dataset, DataFormat};
use crate::linalg::RngSeed;
use crate::oracle::brute_force_knn;
use crate::potential::{NeighborOrdering, PotentialProfile};
use crate::tree::{predicted_spill_storage, PartitionTree, TreeKind, MAX_SPILL_STORED};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Doubling,
    Topic,
    Adversarial,
    ExternalFile,
}

fn default_alpha() -> f64 {
    0.1
}
fn default_k() -> usize {
    1
}
fn default_delta() -> f64 {
    0.05
}
fn default_c_o() -> f64 {
    0.125
}
fn default_trials() -> usize {
    100
}
fn default_queries() -> usize {
    50
}

/// Everything needed to reproduce one experiment. Generator-specific
/// fields are required only by their generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorKind,
    pub tree_kind: TreeKind,
    /// Points to index. For external files, 0 means "whatever the file
    /// holds"; otherwise it must match.
    #[serde(default)]
    pub n: usize,
    /// Ambient dimension (vocabulary size for the topic model). Same rule
    /// as `n` for external files.
    #[serde(default)]
    pub d: usize,
    pub n_o: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_queries")]
    pub queries: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_c_o")]
    pub c_o: f64,
    pub seed: u64,
    /// Doubling: dimension of the ball (defaults to `d`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsic_dim: Option<usize>,
    /// Topic model: number of topics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topics: Option<usize>,
    /// Topic model: expected document length of every topic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_length: Option<f64>,
    /// Adversarial: spike height `M`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spike: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::param(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every parameter before any data is generated or loaded.
    pub fn validate(&self) -> Result<()> {
        let external = self.generator == GeneratorKind::ExternalFile;
        if !external && (self.n == 0 || self.d == 0) {
            return Err(Error::param("n and d must be >= 1"));
        }
        if self.n_o == 0 {
            return Err(Error::param("n_o must be >= 1"));
        }
        if self.tree_kind != TreeKind::Rp && !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::param(format!(
                "alpha must lie in (0, 1/2) for {} trees, got {}",
                self.tree_kind, self.alpha
            )));
        }
        if self.k == 0 {
            return Err(Error::param("k must be >= 1"));
        }
        if self.n != 0 && self.k > self.n {
            return Err(Error::param(format!("k = {} exceeds n = {}", self.k, self.n)));
        }
        if self.trials == 0 {
            return Err(Error::param("trials must be >= 1"));
        }
        if self.queries == 0 {
            return Err(Error::param("queries must be >= 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        if !(self.c_o > 0.0 && self.c_o.is_finite()) {
            return Err(Error::param(format!("c_o must be positive, got {}", self.c_o)));
        }
        if self.tree_kind == TreeKind::Spill && self.n != 0 {
            let p = predicted_spill_storage(self.n, self.n_o, self.alpha);
            if p > MAX_SPILL_STORED {
                return Err(Error::param(format!(
                    "spill tree would store about {p:.3e} indices; lower alpha or raise n_o"
                )));
            }
        }
        let need = |field: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(Error::param(format!(
                    "{field} is required for the {:?} generator",
                    self.generator
                )))
            }
        };
        match self.generator {
            GeneratorKind::Doubling => {
                let d_o = self.intrinsic_dim.unwrap_or(self.d);
                if d_o == 0 || d_o > self.d {
                    return Err(Error::param(format!(
                        "intrinsic_dim {d_o} must lie in [1, d = {}]",
                        self.d
                    )));
                }
            }
            GeneratorKind::Topic => {
                need("topics", self.topics.is_some_and(|t| t >= 1))?;
                need("target_length", self.target_length.is_some())?;
            }
            GeneratorKind::Adversarial => {
                need("spike", self.spike.is_some())?;
                if self.queries != 1 {
                    return Err(Error::param(
                        "the adversarial instance has a single query (the origin); set queries = 1",
                    ));
                }
                self.adversarial_params()?.validate()?;
            }
            GeneratorKind::ExternalFile => {
                need("data_path", self.data_path.is_some())?;
                need("query_path", self.query_path.is_some())?;
            }
        }
        Ok(())
    }

    fn root(&self) -> RngSeed {
        RngSeed::new(self.seed)
    }

    fn doubling_params(&self, n: usize, stream: u64) -> DoublingParams {
        DoublingParams {
            intrinsic_dim: self.intrinsic_dim.unwrap_or(self.d),
            ambient_dim: self.d,
            n,
            seed: self.root().child(stream),
        }
    }

    fn topic_params(&self) -> Result<TopicModelParams> {
        TopicModelParams::random(
            self.topics.unwrap_or(1),
            self.d,
            self.target_length.unwrap_or(0.0),
            self.n,
            self.root().child(0),
        )
    }

    fn adversarial_params(&self) -> Result<AdversarialParams> {
        Ok(AdversarialParams {
            n: self.n,
            dim: self.d,
            spike: self.spike.unwrap_or(0.0),
            seed: self.root().child(0),
        })
    }

    /// The indexed data and the queries.
    pub fn materialize(&self) -> Result<(Dataset, Vec<Vec<f64>>)> {
        self.validate()?;
        let rows = |ds: &Dataset| ds.rows().map(<[f64]>::to_vec).collect::<Vec<_>>();
        let (data, queries) = match self.generator {
            GeneratorKind::Doubling => {
                let data = sample_doubling(&self.doubling_params(self.n, 0))?;
                let q = sample_doubling(&self.doubling_params(self.queries, 1))?;
                (data, rows(&q))
            }
            GeneratorKind::Topic => {
                let params = self.topic_params()?;
                let data = sample_topic_model(&params)?;
                let q = sample_topic_documents(&params, self.queries, &self.root().child(1))?;
                (data, rows(&q))
            }
            GeneratorKind::Adversarial => {
                let inst = sample_adversarial(&self.adversarial_params()?)?;
                (inst.data, vec![inst.query])
            }
            GeneratorKind::ExternalFile => {
                let dp = self.data_path.as_deref().unwrap();
                let qp = self.query_path.as_deref().unwrap();
                let data = load_dataset(dp, DataFormat::from_path(dp))?;
                let q = load_dataset(qp, DataFormat::from_path(qp))?;
                if (self.n != 0 && self.n != data.len()) || (self.d != 0 && self.d != data.dim()) {
                    return Err(Error::param(format!(
                        "config says n = {}, d = {} but {} holds {} points in R^{}",
                        self.n,
                        self.d,
                        dp.display(),
                        data.len(),
                        data.dim()
                    )));
                }
                if q.dim() != data.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: data.dim(),
                        actual: q.dim(),
                    });
                }
                let mut q = rows(&q);
                if q.len() < self.queries {
                    return Err(Error::param(format!(
                        "{} holds {} queries, config asks for {}",
                        qp.display(),
                        q.len(),
                        self.queries
                    )));
                }
                q.truncate(self.queries);
                (data, q)
            }
        };
        if self.k > data.len() {
            return Err(Error::param(format!("k = {} exceeds n = {}", self.k, data.len())));
        }
        Ok((data, queries))
    }
}

/// Per-query outcome across all trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub failures: usize,
    pub failure_rate: f64,
    /// Bound from this query's potential profile, clamped to 1; absent when
    /// the bound's proviso does not hold.
    pub bound: Option<f64>,
    pub raw_bound: Option<f64>,
    /// Potential at each of the report's `levels`.
    pub per_level_phi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryTimeStats {
    pub mean_points_scanned: f64,
    pub mean_leaves_visited: f64,
    pub max_points_scanned: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeSizeStats {
    pub mean_stored_indices: f64,
    pub mean_depth: f64,
    pub mean_leaf_count: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub config: ExperimentConfig,
    pub n: usize,
    pub d: usize,
    /// Failures over all `trials × queries` attempts.
    pub failures: usize,
    pub attempts: usize,
    pub failure_rate: f64,
    /// `sqrt(p (1 − p) / (trials · queries))`.
    pub standard_error: f64,
    /// Mean of the per-query clamped bounds, over queries that have one.
    pub mean_bound: Option<f64>,
    /// Queries whose failure rate does not exceed their bound.
    pub queries_within_bound: usize,
    pub queries_with_bound: usize,
    /// Mean potential at each level, over queries.
    pub levels: Vec<usize>,
    pub mean_per_level_phi: Vec<f64>,
    pub query_time: QueryTimeStats,
    pub tree_size: TreeSizeStats,
    /// Doubling data only: the closed-form bound at the configured `c_o`
    /// (absent if its proviso fails) and the smallest `c_o` that would make
    /// it cover the observed failure rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doubling_bound: Option<BoundValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrated_c_o: Option<f64>,
    pub per_query: Vec<QueryOutcome>,
}

struct Trial {
    failed: Vec<bool>,
    scanned: usize,
    visited: usize,
    max_scanned: usize,
    stored: usize,
    depth: usize,
    leaves: usize,
}

/// Runs the experiment a config describes.
pub fn run_experiment(config: &ExperimentConfig) -> Result<FailureReport> {
    let (data, queries) = config.materialize()?;
    run_on(config, &data, &queries)
}

/// Runs the experiment on data and queries already in hand (the config's
/// generator fields are then only echoed).
pub fn run_on(
    config: &ExperimentConfig,
    data: &Dataset,
    queries: &[Vec<f64>],
) -> Result<FailureReport> {
    if queries.is_empty() {
        return Err(Error::param("queries must be nonempty"));
    }
    for q in queries {
        data.check_query(q)?;
    }
    let (n, k, kind) = (data.len(), config.k, config.tree_kind);
    if k > n {
        return Err(Error::param(format!("k = {k} exceeds n = {n}")));
    }

    // Exact answers and potential profiles, once per query.
    let beta = level_beta(kind, config.alpha);
    let levels = level_sizes(n, config.n_o, beta, k)?;
    let per_query: Vec<(Vec<usize>, PotentialProfile, Vec<f64>)> = queries
        .par_iter()
        .map(|q| {
            let mut exact = brute_force_knn(data, q, k)?.indices;
            exact.sort_unstable();
            let ordering = NeighborOrdering::new(data, q)?;
            let profile = PotentialProfile::compute(&ordering, k, &levels)?;
            let phi = levels.iter().map(|&m| profile.at(m)).collect::<Result<_>>()?;
            Ok((exact, profile, phi))
        })
        .collect::<Result<_>>()?;

    let tree_root = RngSeed::new(config.seed).child(2);
    let trials: Vec<Trial> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let seed = tree_root.child(t as u64).derive_u64();
            let tree = PartitionTree::build(kind, data, config.n_o, config.alpha, seed)?;
            let stats = tree.stats();
            let mut trial = Trial {
                failed: Vec::with_capacity(queries.len()),
                scanned: 0,
                visited: 0,
                max_scanned: 0,
                stored: stats.stored_indices,
                depth: stats.depth,
                leaves: stats.leaf_count,
            };
            for (q, (exact, _, _)) in queries.iter().zip(&per_query) {
                let res = tree.query(data, q, k)?;
                let mut got = res.indices;
                got.sort_unstable();
                trial.failed.push(&got != exact);
                trial.scanned += res.points_scanned;
                trial.visited += res.leaves_visited;
                trial.max_scanned = trial.max_scanned.max(res.points_scanned);
            }
            Ok(trial)
        })
        .collect::<Result<_>>()?;

    let nq = queries.len();
    let attempts = config.trials * nq;
    let mut outcomes = Vec::with_capacity(nq);
    let mut phi_sum = vec![0.0; levels.len()];
    for (j, (_, profile, phi)) in per_query.iter().enumerate() {
        let failures = trials.iter().filter(|t| t.failed[j]).count();
        let bound = failure_bound(profile, kind, config.alpha, config.n_o, n, k).ok();
        for (s, v) in phi_sum.iter_mut().zip(phi) {
            *s += v;
        }
        outcomes.push(QueryOutcome {
            failures,
            failure_rate: failures as f64 / config.trials as f64,
            bound: bound.as_ref().map(|b| b.total),
            raw_bound: bound.as_ref().map(|b| b.raw_total),
            per_level_phi: phi.clone(),
        });
    }
    let failures: usize = outcomes.iter().map(|o| o.failures).sum();
    let p = failures as f64 / attempts as f64;
    let with_bound: Vec<&QueryOutcome> = outcomes.iter().filter(|o| o.bound.is_some()).collect();
    let mean_bound = (!with_bound.is_empty())
        .then(|| with_bound.iter().map(|o| o.bound.unwrap()).sum::<f64>() / with_bound.len() as f64);
    let queries_within_bound = with_bound
        .iter()
        .filter(|o| o.failure_rate <= o.bound.unwrap())
        .count();

    let mean_per_level_phi = phi_sum.iter().map(|s| s / nq as f64).collect();

    let tf = config.trials as f64;
    let query_time = QueryTimeStats {
        mean_points_scanned: trials.iter().map(|t| t.scanned).sum::<usize>() as f64 / attempts as f64,
        mean_leaves_visited: trials.iter().map(|t| t.visited).sum::<usize>() as f64 / attempts as f64,
        max_points_scanned: trials.iter().map(|t| t.max_scanned).max().unwrap_or(0),
    };
    let tree_size = TreeSizeStats {
        mean_stored_indices: trials.iter().map(|t| t.stored).sum::<usize>() as f64 / tf,
        mean_depth: trials.iter().map(|t| t.depth).sum::<usize>() as f64 / tf,
        mean_leaf_count: trials.iter().map(|t| t.leaves).sum::<usize>() as f64 / tf,
    };

    let (doubling_bound, calibrated_c_o) = if config.generator == GeneratorKind::Doubling {
        let d_o = config.intrinsic_dim.unwrap_or(config.d) as f64;
        let family = match kind {
            TreeKind::Rp => BoundFamily::Rp,
            _ => BoundFamily::Spill,
        };
        let bound =
            doubling_failure_bound(k, d_o, config.alpha, config.n_o, config.delta, config.c_o, family);
        let unit = doubling_failure_coefficient(k, d_o, config.alpha, config.n_o, config.delta, family);
        (bound.ok(), unit.ok().map(|u| p / u))
    } else {
        (None, None)
    };

    Ok(FailureReport {
        config: config.clone(),
        n,
        d: data.dim(),
        failures,
        attempts,
        failure_rate: p,
        standard_error: (p * (1.0 - p) / attempts as f64).sqrt(),
        mean_bound,
        queries_within_bound,
        queries_with_bound: with_bound.len(),
        levels,
        mean_per_level_phi,
        query_time,
        tree_size,
        doubling_bound,
        calibrated_c_o,
        per_query: outcomes,
    })
}

impl FailureReport {
    pub fn to_table(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "generator {:?}", c.generator);
        let _ = writeln!(s, "tree_kind {}", c.tree_kind);
        let _ = writeln!(s, "n {}", self.n);
        let _ = writeln!(s, "d {}", self.d);
        let _ = writeln!(s, "n_o {}", c.n_o);
        if c.tree_kind != TreeKind::Rp {
            let _ = writeln!(s, "alpha {}", c.alpha);
        }
        let _ = writeln!(s, "k {}", c.k);
        let _ = writeln!(s, "trials {}", c.trials);
        let _ = writeln!(s, "queries {}", c.queries);
        let _ = writeln!(s, "seed {}", c.seed);
        let _ = writeln!(
            s,
            "failure_rate {:.6} +- {:.6} ({} / {})",
            self.failure_rate, self.standard_error, self.failures, self.attempts
        );
        match self.mean_bound {
            Some(b) => {
                let _ = writeln!(s, "mean_bound {b:.6}");
            }
            None => {
                let _ = writeln!(s, "mean_bound n/a");
            }
        }
        let _ = writeln!(
            s,
            "queries_within_bound {} / {}",
            self.queries_within_bound, self.queries_with_bound
        );
        if let Some(b) = self.doubling_bound {
            let _ = writeln!(s, "doubling_bound {:.6} (raw {:.6e})", b.clamped, b.raw);
        }
        if let Some(c_o) = self.calibrated_c_o {
            let _ = writeln!(s, "calibrated_c_o {c_o:.6e}");
        }
        let _ = writeln!(
            s,
            "mean_points_scanned {:.2}\nmean_leaves_visited {:.2}\nmax_points_scanned {}",
            self.query_time.mean_points_scanned,
            self.query_time.mean_leaves_visited,
            self.query_time.max_points_scanned
        );
        let _ = writeln!(
            s,
            "mean_stored_indices {:.1}\nmean_depth {:.2}",
            self.tree_size.mean_stored_indices, self.tree_size.mean_depth
        );
        let _ = writeln!(s, "{:>5} {:>12} {:>14}", "level", "m", "mean_phi");
        for (i, (m, phi)) in self.levels.iter().zip(&self.mean_per_level_phi).enumerate() {
            let _ = writeln!(s, "{i:>5} {m:>12} {phi:>14.6e}");
        }
        let _ = writeln!(s, "{:>5} {:>10} {:>12} {:>12}", "query", "rate", "bound", "raw_bound");
        for (j, o) in self.per_query.iter().enumerate() {
            let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(
                s,
                "{j:>5} {:>10.4} {:>12} {:>12}",
                o.failure_rate,
                fmt(o.bound),
                fmt(o.raw_bound)
            );
        }
        s
    }
}

/// Writes the report as JSON to `path` and as a text table next to it
/// (same name, `.txt` extension).
pub fn emit_report(report: &FailureReport, path: &Path) -> Result<()> {
    let table_path = path.with_extension("txt");
    if table_path == path {
        return Err(Error::param("report path must not end in .txt; the table goes there"));
    }
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Invariant(format!("report serialization: {e}")))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
    std::fs::write(&table_path, report.to_table()).map_err(|e| Error::io(&table_path, e))
}

pub fn read_report(path: &Path) -> Result<FailureReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig {
            generator: GeneratorKind::Doubling,
            tree_kind: TreeKind::Rp,
            n: 300,
            d: 4,
            n_o: 20,
            alpha: 0.1,
            k: 1,
            trials: 5,
            queries: 4,
            delta: 0.05,
            c_o: 0.125,
            seed: 1,
            intrinsic_dim: Some(2),
            topics: None,
            target_length: None,
            spike: None,
            data_path: None,
            query_path: None,
        }
    }

    #[test]
    fn validation_fails_fast() {
        let mut c = base();
        c.queries = 0;
        assert!(run_experiment(&c).is_err());
        let mut c = base();
        c.tree_kind = TreeKind::Spill;
        c.alpha = 0.5;
        assert!(c.validate().is_err());
        let mut c = base();
        c.generator = GeneratorKind::Topic;
        assert!(c.validate().is_err());
        let mut c = base();
        c.intrinsic_dim = Some(5);
        assert!(c.validate().is_err());
        let mut c = base();
        c.generator = GeneratorKind::ExternalFile;
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_leaf_never_fails() {
        let mut c = base();
        c.n_o = 300;
        for kind in [TreeKind::Rp, TreeKind::Spill, TreeKind::VirtualSpill] {
            c.tree_kind = kind;
            let r = run_experiment(&c).unwrap();
            assert_eq!(r.failure_rate, 0.0);
            assert_eq!(r.query_time.mean_points_scanned, 300.0);
        }
    }

    #[test]
    fn reports_are_reproducible_and_round_trip() {
        let c = base();
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_query.len(), 4);
        assert!(a.failure_rate >= 0.0 && a.failure_rate <= 1.0);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        emit_report(&a, &p).unwrap();
        assert_eq!(read_report(&p).unwrap(), a);
        let table = std::fs::read_to_string(dir.path().join("r.txt")).unwrap();
        assert!(table.contains("failure_rate"));
        assert!(table.contains("seed 1"));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut c = base();
        c.generator = GeneratorKind::Topic;
        c.topics = Some(3);
        c.target_length = Some(20.0);
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert!(ExperimentConfig::from_toml("generator = \"doubling\"\nbogus = 1").is_err());
    }

    #[test]
    fn adversarial_and_topic_configs_run() {
        let mut c = base();
        c.generator = GeneratorKind::Adversarial;
        c.d = 5;
        c.spike = Some(100.0);
        c.queries = 1;
        c.intrinsic_dim = None;
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.per_query.len(), 1);

        let mut c = base();
        c.generator = GeneratorKind::Topic;
        c.d = 60;
        c.topics = Some(2);
        c.target_length = Some(10.0);
        c.intrinsic_dim = None;
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.d, 60);
        assert!(r.calibrated_c_o.is_none());
    }
}
