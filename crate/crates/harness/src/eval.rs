//! Corpus evaluation: scan every manifest entry under one engine
//! configuration and count the outcomes.
//!
//! A false positive is a benign file *confirmed* Infected. A benign file
//! left Suspicious is not an FP — suspicion is a triage state resolved by
//! the operator — but it is reported separately as `suspicious_benign`. A
//! false negative is a malicious file that ends up anything other than
//! Infected.

use std::fs;
use std::io;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use fpguard_core::engine::{is_spx_path, Engine, EngineConfig, EngineError};
use fpguard_core::heuristics::{FeatureWeights, ThresholdTiers, TierLevel};
use fpguard_core::integrity::BaselineStore;
use fpguard_core::sigdb::SignatureDb;
use fpguard_core::verdict::Decision;

use crate::corpus::{CorpusManifest, Label};

/// One evaluation run's configuration.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub db: SignatureDb,
    pub weights: FeatureWeights,
    pub tiers: ThresholdTiers,
    pub engine: EngineConfig,
    pub baseline: Option<BaselineStore>,
}

impl EvalConfig {
    pub fn new(db: SignatureDb, weights: FeatureWeights, tiers: ThresholdTiers) -> Self {
        EvalConfig {
            db,
            weights,
            tiers,
            engine: EngineConfig::default(),
            baseline: None,
        }
    }

    fn build_engine(&self) -> Engine {
        let engine = Engine::new(&self.db, self.weights.clone(), self.tiers, self.engine);
        match &self.baseline {
            Some(b) => engine.with_baseline(b.clone()),
            None => engine,
        }
    }
}

/// Counts and rates for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_count: usize,
    /// Benign files left Suspicious (not counted as FP).
    pub suspicious_benign: usize,
    /// Malicious files left Suspicious (counted in `fn_count`).
    pub suspicious_malicious: usize,
    /// `fp / (fp + tn)`; the denominator is exactly the benign count.
    pub fp_rate: f64,
    /// `fn / (fn + tp)`.
    pub fn_rate: f64,
    pub scanned_bytes: u64,
    pub elapsed_ms: f64,
    pub throughput_bps: f64,
}

/// Per-file outcome of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileOutcome {
    pub path: String,
    pub label: Label,
    pub decision: Decision,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalResult {
    pub metrics: Metrics,
    pub outcomes: Vec<FileOutcome>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Tally decisions into metrics. Pure; shared by `evaluate` and any caller
/// that wants to re-derive counts independently.
pub fn tally(outcomes: &[FileOutcome], scanned_bytes: u64, elapsed_ms: f64) -> Metrics {
    let mut m = Metrics {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_count: 0,
        suspicious_benign: 0,
        suspicious_malicious: 0,
        fp_rate: 0.0,
        fn_rate: 0.0,
        scanned_bytes,
        elapsed_ms,
        throughput_bps: 0.0,
    };
    for o in outcomes {
        match (o.label, o.decision) {
            (Label::Benign, Decision::Infected) => m.fp += 1,
            (Label::Benign, d) => {
                m.tn += 1;
                if d == Decision::Suspicious {
                    m.suspicious_benign += 1;
                }
            }
            (Label::Malicious, Decision::Infected) => m.tp += 1,
            (Label::Malicious, d) => {
                m.fn_count += 1;
                if d == Decision::Suspicious {
                    m.suspicious_malicious += 1;
                }
            }
        }
    }
    m.fp_rate = ratio(m.fp, m.fp + m.tn);
    m.fn_rate = ratio(m.fn_count, m.fn_count + m.tp);
    m.throughput_bps = if elapsed_ms > 0.0 {
        scanned_bytes as f64 / (elapsed_ms / 1000.0)
    } else {
        0.0
    };
    m
}

/// Scan every manifest entry and measure.
pub fn evaluate(manifest: &CorpusManifest, config: &EvalConfig) -> Result<EvalResult, EvalError> {
    let engine = config.build_engine();
    let mut outcomes = Vec::with_capacity(manifest.entries.len());
    let mut scanned_bytes = 0u64;
    let started = Instant::now();
    for entry in &manifest.entries {
        let full = manifest.resolve(entry);
        let data = fs::read(&full).map_err(|source| EvalError::Io {
            path: full.display().to_string(),
            source,
        })?;
        scanned_bytes += data.len() as u64;
        let report = engine.scan_bytes(&entry.path, &data, is_spx_path(Path::new(&entry.path)))?;
        outcomes.push(FileOutcome {
            path: entry.path.clone(),
            label: entry.label,
            decision: report.verdict.decision,
        });
    }
    let elapsed_ms = started.elapsed().as_secs_f64() * 1000.0;
    Ok(EvalResult {
        metrics: tally(&outcomes, scanned_bytes, elapsed_ms),
        outcomes,
    })
}

/// One sweep row.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub threshold: u32,
    pub metrics: Metrics,
}

/// Evaluate once per threshold, holding everything else fixed. Each run
/// classifies heuristic scores against the given threshold; the confirming
/// (high-tier) bound never drops below the shipped profile's.
pub fn threshold_sweep(
    manifest: &CorpusManifest,
    config: &EvalConfig,
    thresholds: &[u32],
) -> Result<Vec<SweepRow>, EvalError> {
    let mut rows = Vec::with_capacity(thresholds.len());
    for &threshold in thresholds {
        let mut cfg = config.clone();
        cfg.tiers = ThresholdTiers {
            low: threshold,
            medium: threshold,
            high: config.tiers.high.max(threshold),
        };
        cfg.engine.tier = TierLevel::Low;
        let result = evaluate(manifest, &cfg)?;
        rows.push(SweepRow {
            threshold,
            metrics: result.metrics,
        });
    }
    Ok(rows)
}

/// Throughput over repeated scans.
#[derive(Debug, Clone, Serialize)]
pub struct TimingReport {
    pub repetitions: usize,
    pub scanned_bytes: u64,
    pub elapsed_ms: Vec<f64>,
    pub median_throughput_bps: f64,
    /// Whether every repetition produced identical per-file decisions.
    pub decisions_stable: bool,
}

/// Scan the corpus `repetitions` times; report the median throughput and
/// whether results were identical across runs.
pub fn time_scan(
    manifest: &CorpusManifest,
    config: &EvalConfig,
    repetitions: usize,
) -> Result<TimingReport, EvalError> {
    let repetitions = repetitions.max(1);
    let mut elapsed_ms = Vec::with_capacity(repetitions);
    let mut throughputs = Vec::with_capacity(repetitions);
    let mut first: Option<Vec<FileOutcome>> = None;
    let mut stable = true;
    let mut scanned_bytes = 0;
    for _ in 0..repetitions {
        let result = evaluate(manifest, config)?;
        scanned_bytes = result.metrics.scanned_bytes;
        elapsed_ms.push(result.metrics.elapsed_ms);
        throughputs.push(result.metrics.throughput_bps);
        match &first {
            None => first = Some(result.outcomes),
            Some(f) => stable &= *f == result.outcomes,
        }
    }
    throughputs.sort_by(f64::total_cmp);
    let median_throughput_bps = throughputs[throughputs.len() / 2];
    Ok(TimingReport {
        repetitions,
        scanned_bytes,
        elapsed_ms,
        median_throughput_bps,
        decisions_stable: stable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::generate_corpus;
    use fpguard_core::heuristics::default_profile;

    fn corpus_config(dir: &Path, seed: u64, nb: usize, nm: usize) -> (CorpusManifest, EvalConfig) {
        let gen = generate_corpus(seed, nb, nm, dir).unwrap();
        let (weights, tiers) = default_profile();
        (gen.manifest, EvalConfig::new(gen.db, weights, tiers))
    }

    #[test]
    fn clean_corpus_has_zero_fp_rate() {
        let dir = tempfile::tempdir().unwrap();
        let (manifest, config) = corpus_config(dir.path(), 11, 30, 0);
        let result = evaluate(&manifest, &config).unwrap();
        assert_eq!(result.metrics.fp, 0);
        assert_eq!(result.metrics.fp_rate, 0.0);
        assert_eq!(result.metrics.tp + result.metrics.fn_count, 0);
        assert_eq!(result.metrics.tn, 30);
    }

    #[test]
    fn counts_partition_the_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let (manifest, config) = corpus_config(dir.path(), 12, 25, 10);
        let m = evaluate(&manifest, &config).unwrap().metrics;
        assert_eq!(m.tp + m.fp + m.tn + m.fn_count, 35);
        assert_eq!(m.fp + m.tn, 25, "fp_rate denominator is the benign count");
        assert_eq!(m.fn_count + m.tp, 10);
    }

    #[test]
    fn fp_rate_arithmetic() {
        let outcomes: Vec<FileOutcome> = (0..60)
            .map(|i| FileOutcome {
                path: format!("f{i}"),
                label: Label::Benign,
                decision: if i < 3 {
                    Decision::Infected
                } else {
                    Decision::Clean
                },
            })
            .collect();
        let m = tally(&outcomes, 0, 0.0);
        assert_eq!(m.fp, 3);
        assert_eq!(m.fp_rate, 0.05);
    }

    #[test]
    fn default_config_catches_all_generated_malware() {
        let dir = tempfile::tempdir().unwrap();
        let (manifest, config) = corpus_config(dir.path(), 13, 20, 12);
        let m = evaluate(&manifest, &config).unwrap().metrics;
        assert_eq!(m.fn_count, 0);
        assert_eq!(m.fp, 0);
    }

    #[test]
    fn sweep_single_threshold_matches_evaluate() {
        let dir = tempfile::tempdir().unwrap();
        let (manifest, mut config) = corpus_config(dir.path(), 14, 15, 6);
        config.engine.tier = TierLevel::Low;
        config.tiers = ThresholdTiers {
            low: 6,
            medium: 6,
            high: config.tiers.high,
        };
        let direct = evaluate(&manifest, &config).unwrap().metrics;
        let rows = threshold_sweep(&manifest, &config, &[6]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].metrics.fp, direct.fp);
        assert_eq!(rows[0].metrics.fn_count, direct.fn_count);
        assert_eq!(rows[0].metrics.tp, direct.tp);
    }

    #[test]
    fn timing_runs_are_stable() {
        let dir = tempfile::tempdir().unwrap();
        let (manifest, config) = corpus_config(dir.path(), 15, 8, 3);
        let report = time_scan(&manifest, &config, 3).unwrap();
        assert_eq!(report.repetitions, 3);
        assert!(report.decisions_stable);
        assert!(report.median_throughput_bps > 0.0);
    }
}
