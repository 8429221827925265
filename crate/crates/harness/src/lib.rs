//! fpguard-harness: labeled synthetic corpora and FP/FN measurement.
//!
//! [`corpus`] generates seeded, reproducible SPX corpora with known-benign
//! and known-malicious files; [`eval`] scans a corpus under any engine
//! configuration and reports TP/FP/TN/FN counts, rates, threshold sweeps
//! and throughput; [`streams`] ships the synthetic packet streams used for
//! the network-window experiments.

pub mod corpus;
pub mod eval;
pub mod streams;

pub use corpus::{generate_corpus, CorpusManifest, GeneratedCorpus, Label, ManifestEntry};
pub use eval::{evaluate, threshold_sweep, time_scan, EvalConfig, EvalResult, Metrics};
