//! Randomized partition trees for exact nearest-neighbor search.
//!
//! Three trees share one recursive construction: pick a random direction,
//! project, split. The RP tree splits at a perturbed fractile, the spill tree
//! stores overlapping children, and the virtual spill tree stores disjoint
//! children but lets queries follow both sides of an overlap. Queries scan
//! the leaves they reach without backtracking, so they can miss the true
//! neighbors; the potential function `Φ` of a query and its data governs how
//! often.
//!
//! Beyond the trees, the crate provides `Φ` and the exact probability
//! that a random projection separates two points ([`potential`]),
//! synthetic data generators ([`generators`]), exact oracles
//! ([`oracle`]), closed-form bounds ([`bounds`]), Monte Carlo estimators
//! ([`eval`]) and an experiment driver ([`experiment`]).

pub mod bounds;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod generators;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod potential;
pub mod tree;

pub use dataset::{Dataset, Provenance};
pub use error::{Error, Result};
pub use experiment::{emit_report, run_experiment, ExperimentConfig, FailureReport};
pub use linalg::{RngSeed, UnitDirection};
pub use potential::{NeighborOrdering, PotentialProfile};
pub use tree::{PartitionTree, QueryResult, TreeKind, TreeStats};
