//! The scan pipeline: run the configured detectors over one target and
//! combine their evidence into a verdict.
//!
//! Per target the engine runs, in order: exact/generic signature matching
//! over the raw bytes, an integrity check against the baseline (when one is
//! loaded), and — for SPX programs — static feature extraction, sandboxed
//! execution with dynamic feature derivation, and the ability-manifest
//! diff. Detectors can be switched off individually, which is how the
//! evaluation harness isolates methods for comparison.

use std::collections::BTreeSet;
use std::fs::File;
use std::io;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::heuristics::{
    classify_tier, score, Classification, FeatureId, FeatureSet, FeatureWeights, HeuristicScore,
    ThresholdTiers, TierLevel,
};
use crate::integrity::{self, BaselineStore, CheckResult};
use crate::matcher::{CompiledMatcher, MatchHit, MatchKind};
use crate::sandbox::{self, BehaviorKind, ExecutionTrace};
use crate::sigdb::SignatureDb;
use crate::spx::{self, Program, SpxError};
use crate::verdict::{combine, CombinationPolicy, Evidence, EvidenceCategory, Strength, Verdict};

/// Files at least this large are scanned in windows instead of one buffer.
const WHOLE_FILE_LIMIT: u64 = 64 << 20;

/// Which detectors participate in a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DetectorSet {
    pub exact: bool,
    pub generic: bool,
    pub integrity: bool,
    pub heuristic_static: bool,
    pub heuristic_dynamic: bool,
    pub ability: bool,
}

impl Default for DetectorSet {
    fn default() -> Self {
        DetectorSet::ALL
    }
}

impl DetectorSet {
    pub const ALL: DetectorSet = DetectorSet {
        exact: true,
        generic: true,
        integrity: true,
        heuristic_static: true,
        heuristic_dynamic: true,
        ability: true,
    };

    pub const NONE: DetectorSet = DetectorSet {
        exact: false,
        generic: false,
        integrity: false,
        heuristic_static: false,
        heuristic_dynamic: false,
        ability: false,
    };

    fn needs_spx(&self) -> bool {
        self.heuristic_static || self.heuristic_dynamic || self.ability
    }

    fn needs_sandbox(&self) -> bool {
        self.heuristic_dynamic || self.ability
    }
}

/// Scan-time configuration shared across files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EngineConfig {
    pub tier: TierLevel,
    pub policy: CombinationPolicy,
    pub detectors: DetectorSet,
    /// Sandbox step budget.
    pub budget: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            tier: TierLevel::Medium,
            policy: CombinationPolicy::default(),
            detectors: DetectorSet::ALL,
            budget: sandbox::DEFAULT_BUDGET,
        }
    }
}

/// Everything the pipeline produced for one target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileReport {
    pub path_id: String,
    pub verdict: Verdict,
    pub hits: Vec<MatchHit>,
    pub static_score: Option<HeuristicScore>,
    pub dynamic_score: Option<HeuristicScore>,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: SpxError,
    },
}

/// True when a path should be treated as an SPX program.
pub fn is_spx_path(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("spx"))
}

/// Dynamic features derived from a sandbox trace and the ability diff.
pub fn dynamic_features(
    trace: &ExecutionTrace,
    ability_diff: &BTreeSet<BehaviorKind>,
) -> FeatureSet {
    let mut features = FeatureSet::new();
    for event in &trace.events {
        match event.kind {
            BehaviorKind::Format => {
                features.insert(FeatureId::DynFormat);
            }
            BehaviorKind::MoveSys => {
                features.insert(FeatureId::DynMovesys);
            }
            BehaviorKind::SelfCopy => {
                features.insert(FeatureId::DynSelfcopy);
            }
            BehaviorKind::NetSend => {
                features.insert(FeatureId::DynNetsend);
            }
            _ => {}
        }
    }
    if trace.terminated == sandbox::Termination::BudgetExhausted {
        features.insert(FeatureId::LoopsLong);
    }
    if !ability_diff.is_empty() {
        features.insert(FeatureId::AbilityViolation);
    }
    features
}

/// A compiled, shareable scan engine. Immutable once built; scanning is
/// reentrant, so files may be scanned concurrently against one engine.
pub struct Engine {
    matcher: CompiledMatcher,
    weights: FeatureWeights,
    tiers: ThresholdTiers,
    baseline: Option<BaselineStore>,
    config: EngineConfig,
}

impl Engine {
    pub fn new(
        db: &SignatureDb,
        weights: FeatureWeights,
        tiers: ThresholdTiers,
        config: EngineConfig,
    ) -> Self {
        Engine {
            matcher: crate::matcher::compile(db),
            weights,
            tiers,
            baseline: None,
            config,
        }
    }

    pub fn with_baseline(mut self, baseline: BaselineStore) -> Self {
        self.baseline = Some(baseline);
        self
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn matcher(&self) -> &CompiledMatcher {
        &self.matcher
    }

    /// Scan an in-memory target.
    pub fn scan_bytes(
        &self,
        path_id: &str,
        data: &[u8],
        treat_as_spx: bool,
    ) -> Result<FileReport, EngineError> {
        let hits = self.matcher.scan_bytes(data);
        let integrity_result = self
            .baseline
            .as_ref()
            .map(|b| b.check(path_id, data))
            .unwrap_or(CheckResult::Unknown);
        self.assemble(path_id, data, treat_as_spx, hits, integrity_result)
    }

    /// Scan a file from disk. Large non-SPX files are scanned in windows.
    pub fn scan_path(&self, path: &Path, path_id: &str) -> Result<FileReport, EngineError> {
        let io_err = |source| EngineError::Io {
            path: path.display().to_string(),
            source,
        };
        let meta = std::fs::metadata(path).map_err(io_err)?;
        let as_spx = is_spx_path(path);
        if as_spx || meta.len() < WHOLE_FILE_LIMIT {
            let data = std::fs::read(path).map_err(io_err)?;
            return self.scan_bytes(path_id, &data, as_spx);
        }

        let hits = self
            .matcher
            .scan_reader(File::open(path).map_err(io_err)?)
            .map_err(io_err)?;
        let integrity_result = match &self.baseline {
            Some(b) => {
                let digest =
                    integrity::digest_reader(File::open(path).map_err(io_err)?).map_err(io_err)?;
                b.check_digest(path_id, digest)
            }
            None => CheckResult::Unknown,
        };
        self.assemble(path_id, &[], false, hits, integrity_result)
    }

    fn assemble(
        &self,
        path_id: &str,
        data: &[u8],
        treat_as_spx: bool,
        hits: Vec<MatchHit>,
        integrity_result: CheckResult,
    ) -> Result<FileReport, EngineError> {
        let d = &self.config.detectors;
        let mut evidence: Vec<Evidence> = Vec::new();

        if d.exact {
            if let Some(detail) = summarize_hits(&hits, MatchKind::Exact) {
                evidence.push(Evidence::confirming(EvidenceCategory::ExactSig, detail));
            }
        }
        if d.generic {
            if let Some(detail) = summarize_hits(&hits, MatchKind::Generic) {
                evidence.push(Evidence::suggestive(EvidenceCategory::GenericSig, detail));
            }
        }
        if d.integrity && integrity_result == CheckResult::Modified {
            evidence.push(Evidence::suggestive(
                EvidenceCategory::IntegrityModified,
                format!("baseline mismatch for {path_id}"),
            ));
        }

        let mut static_score = None;
        let mut dynamic_score = None;
        if treat_as_spx && d.needs_spx() {
            let text = std::str::from_utf8(data).map_err(|e| EngineError::Parse {
                path: path_id.to_string(),
                source: SpxError::Syntax {
                    line: 0,
                    reason: format!("not UTF-8: {e}"),
                },
            })?;
            let program: Program = spx::parse_spx(text).map_err(|source| EngineError::Parse {
                path: path_id.to_string(),
                source,
            })?;

            if d.heuristic_static {
                let features = spx::extract_static_features(&program);
                let s = score(&features, &self.weights);
                if let Some(ev) = self.heuristic_evidence(EvidenceCategory::HeuristicStatic, &s) {
                    evidence.push(ev);
                }
                static_score = Some(s);
            }
            if d.needs_sandbox() {
                let trace = sandbox::execute(&program, self.config.budget);
                let diff = sandbox::diff_abilities(&program, &trace);
                if d.heuristic_dynamic {
                    let features = dynamic_features(&trace, &diff);
                    let s = score(&features, &self.weights);
                    if let Some(ev) =
                        self.heuristic_evidence(EvidenceCategory::HeuristicDynamic, &s)
                    {
                        evidence.push(ev);
                    }
                    dynamic_score = Some(s);
                }
                if d.ability && !diff.is_empty() {
                    let kinds: Vec<String> = diff.iter().map(|k| k.to_string()).collect();
                    evidence.push(Evidence::suggestive(
                        EvidenceCategory::AbilityViolation,
                        kinds.join(","),
                    ));
                }
            }
        }

        let verdict = combine(&evidence, &self.config.policy);
        Ok(FileReport {
            path_id: path_id.to_string(),
            verdict,
            hits,
            static_score,
            dynamic_score,
        })
    }

    /// Heuristic evidence fires when the score crosses the selected tier;
    /// it confirms on its own only at the high tier.
    fn heuristic_evidence(
        &self,
        category: EvidenceCategory,
        s: &HeuristicScore,
    ) -> Option<Evidence> {
        if classify_tier(s, &self.tiers, self.config.tier) != Classification::Suspicious {
            return None;
        }
        let strength = if s.net >= self.tiers.high {
            Strength::Confirming
        } else {
            Strength::Suggestive
        };
        let feats: Vec<String> = s.triggered.iter().map(|f| f.to_string()).collect();
        Some(Evidence::new(
            category,
            format!("net={} [{}]", s.net, feats.join(",")),
            strength,
        ))
    }
}

fn summarize_hits(hits: &[MatchHit], kind: MatchKind) -> Option<String> {
    let mut names: Vec<String> = Vec::new();
    for h in hits.iter().filter(|h| h.kind == kind) {
        let entry = format!("{}@{}", h.signature_name, h.offset);
        // Keep only each signature's first (lowest-offset) hit.
        if !names
            .iter()
            .any(|n| n.starts_with(&format!("{}@", h.signature_name)))
        {
            names.push(entry);
        }
    }
    if names.is_empty() {
        None
    } else {
        Some(names.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::default_profile;
    use crate::sigdb::parse_db;
    use crate::verdict::Decision;

    fn engine_with(db_text: &str, config: EngineConfig) -> Engine {
        let db = parse_db(db_text).unwrap();
        let (weights, tiers) = default_profile();
        Engine::new(&db, weights, tiers, config)
    }

    const PLAIN_DB: &str =
        "AVDB 1\nEXACT marker 504c414e544544\nGENERIC fam 46 41 4d *{0-8} 4b 49 54\n";

    #[test]
    fn clean_program_scans_clean() {
        let engine = engine_with(PLAIN_DB, EngineConfig::default());
        let text = ".name ok\n.abilities Open Read Close\nOPEN \"f\"\nREAD\nCLOSE\n";
        let report = engine.scan_bytes("ok.spx", text.as_bytes(), true).unwrap();
        assert_eq!(report.verdict.decision, Decision::Clean);
        assert!(report.verdict.evidence.is_empty());
        assert_eq!(report.static_score.unwrap().net, 0);
    }

    #[test]
    fn planted_signature_confirms() {
        let engine = engine_with(PLAIN_DB, EngineConfig::default());
        let text = ".name bad\n.str \"xxPLANTEDxx\"\nNOP\n";
        let report = engine.scan_bytes("bad.spx", text.as_bytes(), true).unwrap();
        assert_eq!(report.verdict.decision, Decision::Infected);
        assert_eq!(
            report.verdict.evidence[0].category,
            EvidenceCategory::ExactSig
        );
        assert!(report.hits.iter().any(|h| h.kind == MatchKind::Exact));
    }

    #[test]
    fn generic_family_hit_alone_is_suspicious() {
        let engine = engine_with(PLAIN_DB, EngineConfig::default());
        let text = ".name fam\n.str \"FAMxyzKIT\"\n.abilities Open\nOPEN \"f\"\n";
        let report = engine.scan_bytes("fam.spx", text.as_bytes(), true).unwrap();
        assert_eq!(report.verdict.decision, Decision::Suspicious);
        assert_eq!(report.verdict.evidence.len(), 1);
        assert_eq!(
            report.verdict.evidence[0].category,
            EvidenceCategory::GenericSig
        );
    }

    #[test]
    fn behavior_only_malware_confirms_via_dynamic_high_tier() {
        let engine = engine_with("AVDB 1\n", EngineConfig::default());
        // No manifest: static HAS_COPYSELF+HAS_FORMAT=9; dynamic
        // DYN_SELFCOPY+DYN_FORMAT+ABILITY_VIOLATION=15 >= high(11).
        let text = ".name rep\nCOPYSELF\nFORMAT\n";
        let report = engine.scan_bytes("rep.spx", text.as_bytes(), true).unwrap();
        assert_eq!(report.verdict.decision, Decision::Infected);
        let dynamic = report
            .verdict
            .evidence
            .iter()
            .find(|e| e.category == EvidenceCategory::HeuristicDynamic)
            .unwrap();
        assert_eq!(dynamic.strength, Strength::Confirming);
        assert!(report
            .verdict
            .evidence
            .iter()
            .any(|e| e.category == EvidenceCategory::AbilityViolation));
    }

    #[test]
    fn static_only_scanner_confirms_at_high_tier() {
        // Static-only detector set (the fast path: no sandbox execution).
        // COPYSELF+FORMAT+MOVESYS = 12 >= high(11): confirming on its own.
        let config = EngineConfig {
            detectors: DetectorSet {
                heuristic_static: true,
                ..DetectorSet::NONE
            },
            policy: CombinationPolicy {
                k_confirm: 2,
                ..CombinationPolicy::default()
            },
            ..EngineConfig::default()
        };
        let engine = engine_with("AVDB 1\n", config);
        let text = ".name loud\nCOPYSELF\nFORMAT\nMOVESYS \"sys/b\"\n";
        let report = engine.scan_bytes("loud.spx", text.as_bytes(), true).unwrap();
        assert_eq!(report.verdict.decision, Decision::Infected);
        assert_eq!(report.verdict.evidence.len(), 1);
        assert_eq!(report.verdict.evidence[0].strength, Strength::Confirming);
        assert!(report.dynamic_score.is_none(), "static-only must skip the sandbox");
    }

    #[test]
    fn integrity_modification_is_suspicious_alone() {
        let mut baseline = BaselineStore::new();
        baseline.insert("cfg", crate::integrity::digest_file(b"original"));
        let engine = engine_with("AVDB 1\n", EngineConfig::default()).with_baseline(baseline);
        let report = engine.scan_bytes("cfg", b"tampered", false).unwrap();
        assert_eq!(report.verdict.decision, Decision::Suspicious);
        assert_eq!(
            report.verdict.evidence[0].category,
            EvidenceCategory::IntegrityModified
        );
    }

    #[test]
    fn unknown_path_is_not_evidence() {
        let engine =
            engine_with("AVDB 1\n", EngineConfig::default()).with_baseline(BaselineStore::new());
        let report = engine.scan_bytes("new-file", b"whatever", false).unwrap();
        assert_eq!(report.verdict.decision, Decision::Clean);
    }

    #[test]
    fn detectors_can_be_disabled() {
        let config = EngineConfig {
            detectors: DetectorSet {
                exact: false,
                ..DetectorSet::ALL
            },
            ..EngineConfig::default()
        };
        let engine = engine_with(PLAIN_DB, config);
        let report = engine.scan_bytes("x", b"..PLANTED..", false).unwrap();
        assert_eq!(report.verdict.decision, Decision::Clean);
        // Hits are still reported; they just produce no evidence.
        assert!(!report.hits.is_empty());
    }

    #[test]
    fn tier_selection_changes_outcome() {
        // Static features worth net 5 with goodwill: suspicious at Low only.
        let text = ".name tricky\n.abilities Open Read Write MoveSys Decrypt\n.str \"scans VIRUS defs\"\nOPEN \"db\"\nREAD\nWRITE\nJMP done\nMOVESYS \"sys/cache\"\nDECRYPT\nLABEL done\n";
        let low = EngineConfig {
            tier: TierLevel::Low,
            ..EngineConfig::default()
        };
        let engine = engine_with("AVDB 1\n", low);
        let report = engine.scan_bytes("t.spx", text.as_bytes(), true).unwrap();
        assert_eq!(report.static_score.as_ref().unwrap().net, 5);
        assert_eq!(report.verdict.decision, Decision::Suspicious);

        let medium = EngineConfig {
            tier: TierLevel::Medium,
            ..EngineConfig::default()
        };
        let engine = engine_with("AVDB 1\n", medium);
        let report = engine.scan_bytes("t.spx", text.as_bytes(), true).unwrap();
        assert_eq!(report.verdict.decision, Decision::Clean);
    }

    #[test]
    fn malformed_spx_is_a_parse_error() {
        let engine = engine_with("AVDB 1\n", EngineConfig::default());
        let err = engine
            .scan_bytes("bad.spx", b".name x\nBOGUS\n", true)
            .unwrap_err();
        assert!(matches!(err, EngineError::Parse { .. }));
    }

    #[test]
    fn non_spx_bytes_skip_heuristics() {
        let engine = engine_with("AVDB 1\n", EngineConfig::default());
        let report = engine
            .scan_bytes("blob", b"\x00\x01\x02 not spx", false)
            .unwrap();
        assert_eq!(report.verdict.decision, Decision::Clean);
        assert!(report.static_score.is_none());
        assert!(report.dynamic_score.is_none());
    }

    #[test]
    fn spx_path_detection() {
        assert!(is_spx_path(Path::new("a/b/c.spx")));
        assert!(is_spx_path(Path::new("C.SPX")));
        assert!(!is_spx_path(Path::new("c.txt")));
        assert!(!is_spx_path(Path::new("spx")));
    }
}
