//! fpguard-core: a malware-scanning engine for the SPX synthetic program
//! format, built around false-positive throttling.
//!
//! Detection methods, each in its own module:
//! - [`sigdb`] / [`matcher`] — exact and wildcard signature scanning
//! - [`integrity`] — hash-baseline modification checks
//! - [`spx`] — SPX parsing and static heuristic features
//! - [`sandbox`] — emulated execution and ability-manifest diffing
//! - [`heuristics`] — weighted feature scoring against threshold tiers
//! - [`netwindow`] — windowed network anomaly scoring
//! - [`sigselect`] — benign-corpus-aware signature selection
//!
//! [`verdict`] combines per-method evidence into a Clean/Suspicious/Infected
//! decision; [`engine`] wires the detectors into a single scan pipeline.

pub mod engine;
pub mod heuristics;
pub mod integrity;
pub mod matcher;
pub mod netwindow;
pub mod sandbox;
pub mod sigdb;
pub mod sigselect;
pub mod spx;
pub mod verdict;

pub use engine::{DetectorSet, Engine, EngineConfig, FileReport};
pub use heuristics::{FeatureId, FeatureWeights, HeuristicScore, ThresholdTiers, TierLevel};
pub use matcher::{CompiledMatcher, MatchHit, MatchKind};
pub use sandbox::{BehaviorKind, ExecutionTrace};
pub use sigdb::SignatureDb;
pub use spx::Program;
pub use verdict::{CombinationPolicy, Decision, Evidence, EvidenceCategory, Verdict};
