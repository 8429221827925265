//! Weighted heuristic scoring.
//!
//! Every detector that goes beyond byte-exact identification reports its
//! findings as features from a closed registry. A scoring profile assigns
//! each feature a weight, goodwill features a credit, and defines the
//! low/medium/high threshold tiers a score is classified against. The net
//! score is the weight sum minus the goodwill credit, clamped at zero, so a
//! single virus-like characteristic never carries a file over the medium
//! threshold on its own (the shipped profile guarantees this; see tests).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

/// Scoring profile shipped with the engine. Tuned against the synthetic
/// corpus; all values are configuration, not ground truth.
pub const DEFAULT_PROFILE: &str = include_str!("../profiles/default.avw");

/// Closed registry of heuristic features.
///
/// `HAS_*` / `OPEN_READ_WRITE_SEQ` / `STR_VIRUS` / `UNDECLARED_OPCODE` /
/// `DECLARED_ALL` are static (extracted from program text), `DYN_*` /
/// `LOOPS_LONG` / `ABILITY_VIOLATION` come from sandbox traces, and
/// `RATE_SPIKE` / `FANOUT_HIGH` / `PAYLOAD_REPEAT` from network windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FeatureId {
    OpenReadWriteSeq,
    StrVirus,
    HasCopyself,
    HasFormat,
    HasMovesys,
    HasDecrypt,
    UndeclaredOpcode,
    DeclaredAll,
    LoopsLong,
    AbilityViolation,
    DynFormat,
    DynMovesys,
    DynSelfcopy,
    DynNetsend,
    RateSpike,
    FanoutHigh,
    PayloadRepeat,
}

impl FeatureId {
    /// The full registered universe, in canonical order.
    pub const ALL: [FeatureId; 17] = [
        FeatureId::OpenReadWriteSeq,
        FeatureId::StrVirus,
        FeatureId::HasCopyself,
        FeatureId::HasFormat,
        FeatureId::HasMovesys,
        FeatureId::HasDecrypt,
        FeatureId::UndeclaredOpcode,
        FeatureId::DeclaredAll,
        FeatureId::LoopsLong,
        FeatureId::AbilityViolation,
        FeatureId::DynFormat,
        FeatureId::DynMovesys,
        FeatureId::DynSelfcopy,
        FeatureId::DynNetsend,
        FeatureId::RateSpike,
        FeatureId::FanoutHigh,
        FeatureId::PayloadRepeat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureId::OpenReadWriteSeq => "OPEN_READ_WRITE_SEQ",
            FeatureId::StrVirus => "STR_VIRUS",
            FeatureId::HasCopyself => "HAS_COPYSELF",
            FeatureId::HasFormat => "HAS_FORMAT",
            FeatureId::HasMovesys => "HAS_MOVESYS",
            FeatureId::HasDecrypt => "HAS_DECRYPT",
            FeatureId::UndeclaredOpcode => "UNDECLARED_OPCODE",
            FeatureId::DeclaredAll => "DECLARED_ALL",
            FeatureId::LoopsLong => "LOOPS_LONG",
            FeatureId::AbilityViolation => "ABILITY_VIOLATION",
            FeatureId::DynFormat => "DYN_FORMAT",
            FeatureId::DynMovesys => "DYN_MOVESYS",
            FeatureId::DynSelfcopy => "DYN_SELFCOPY",
            FeatureId::DynNetsend => "DYN_NETSEND",
            FeatureId::RateSpike => "RATE_SPIKE",
            FeatureId::FanoutHigh => "FANOUT_HIGH",
            FeatureId::PayloadRepeat => "PAYLOAD_REPEAT",
        }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureId {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureId::ALL
            .iter()
            .copied()
            .find(|id| id.name() == s)
            .ok_or(())
    }
}

/// A set of triggered features. Set semantics: order and multiplicity of the
/// underlying observations never affect the score.
pub type FeatureSet = BTreeSet<FeatureId>;

/// Per-feature weights and goodwill credits.
///
/// A feature id may appear in at most one of the two maps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureWeights {
    pub weights: BTreeMap<FeatureId, u32>,
    pub goodwill: BTreeMap<FeatureId, u32>,
}

impl FeatureWeights {
    /// Largest single weight in the profile.
    pub fn max_weight(&self) -> u32 {
        self.weights.values().copied().max().unwrap_or(0)
    }

    /// True when every registered feature appears in one of the maps.
    pub fn covers_registry(&self) -> bool {
        FeatureId::ALL
            .iter()
            .all(|id| self.weights.contains_key(id) || self.goodwill.contains_key(id))
    }
}

/// Low/medium/high sensitivity thresholds, non-decreasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ThresholdTiers {
    pub low: u32,
    pub medium: u32,
    pub high: u32,
}

impl ThresholdTiers {
    pub fn value(&self, tier: TierLevel) -> u32 {
        match tier {
            TierLevel::Low => self.low,
            TierLevel::Medium => self.medium,
            TierLevel::High => self.high,
        }
    }
}

/// Which threshold tier a scan runs at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TierLevel {
    Low,
    Medium,
    High,
}

impl fmt::Display for TierLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TierLevel::Low => f.write_str("low"),
            TierLevel::Medium => f.write_str("medium"),
            TierLevel::High => f.write_str("high"),
        }
    }
}

impl FromStr for TierLevel {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low" => Ok(TierLevel::Low),
            "medium" => Ok(TierLevel::Medium),
            "high" => Ok(TierLevel::High),
            _ => Err(()),
        }
    }
}

/// Result of scoring a feature set against a profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HeuristicScore {
    /// Sum of weights over triggered weighted features.
    pub raw: u32,
    /// Sum of credits over triggered goodwill features.
    pub credit: u32,
    /// `max(0, raw - credit)`.
    pub net: u32,
    /// Triggered features that carry a weight.
    pub triggered: FeatureSet,
    /// Triggered features that carry a goodwill credit.
    pub goodwill_triggered: FeatureSet,
}

/// Benign-or-suspicious call for one score at one tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Benign,
    Suspicious,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WeightsError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: unknown feature `{name}`")]
    UnknownFeature { line: usize, name: String },
    #[error("thresholds must be non-decreasing, got {low} {medium} {high}")]
    NonMonotoneTiers { low: u32, medium: u32, high: u32 },
}

/// Parse a `.avw` weights file.
///
/// Lines: `FEATURE <id> <weight>`, `GOODWILL <id> <credit>`,
/// `THRESHOLD <low> <medium> <high>` (required exactly once); `#` starts a
/// comment, blank lines are skipped.
pub fn load_weights(text: &str) -> Result<(FeatureWeights, ThresholdTiers), WeightsError> {
    let mut weights = FeatureWeights::default();
    let mut tiers: Option<ThresholdTiers> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields[0] {
            "FEATURE" | "GOODWILL" => {
                let [_, name, value] = fields[..] else {
                    return Err(WeightsError::Syntax {
                        line,
                        reason: format!("expected `{} <id> <value>`", fields[0]),
                    });
                };
                let id = FeatureId::from_str(name).map_err(|_| WeightsError::UnknownFeature {
                    line,
                    name: name.to_string(),
                })?;
                let value: u32 = value.parse().map_err(|_| WeightsError::Syntax {
                    line,
                    reason: format!("invalid value `{value}`"),
                })?;
                if weights.weights.contains_key(&id) || weights.goodwill.contains_key(&id) {
                    return Err(WeightsError::Syntax {
                        line,
                        reason: format!("feature `{id}` declared twice"),
                    });
                }
                if fields[0] == "FEATURE" {
                    weights.weights.insert(id, value);
                } else {
                    weights.goodwill.insert(id, value);
                }
            }
            "THRESHOLD" => {
                let [_, low, medium, high] = fields[..] else {
                    return Err(WeightsError::Syntax {
                        line,
                        reason: "expected `THRESHOLD <low> <medium> <high>`".into(),
                    });
                };
                if tiers.is_some() {
                    return Err(WeightsError::Syntax {
                        line,
                        reason: "THRESHOLD declared twice".into(),
                    });
                }
                let parse = |s: &str| -> Result<u32, WeightsError> {
                    s.parse().map_err(|_| WeightsError::Syntax {
                        line,
                        reason: format!("invalid threshold `{s}`"),
                    })
                };
                let (low, medium, high) = (parse(low)?, parse(medium)?, parse(high)?);
                if !(low <= medium && medium <= high) {
                    return Err(WeightsError::NonMonotoneTiers { low, medium, high });
                }
                tiers = Some(ThresholdTiers { low, medium, high });
            }
            other => {
                return Err(WeightsError::Syntax {
                    line,
                    reason: format!("unknown directive `{other}`"),
                });
            }
        }
    }

    let tiers = tiers.ok_or(WeightsError::Syntax {
        line: text.lines().count() + 1,
        reason: "missing THRESHOLD line".into(),
    })?;
    Ok((weights, tiers))
}

/// Load the shipped default profile.
pub fn default_profile() -> (FeatureWeights, ThresholdTiers) {
    load_weights(DEFAULT_PROFILE).expect("shipped profile is valid")
}

/// Score a feature set: weight sum minus goodwill credit, clamped at zero.
pub fn score(features: &FeatureSet, w: &FeatureWeights) -> HeuristicScore {
    let mut raw = 0u32;
    let mut credit = 0u32;
    let mut triggered = FeatureSet::new();
    let mut goodwill_triggered = FeatureSet::new();
    for &f in features {
        if let Some(&weight) = w.weights.get(&f) {
            raw += weight;
            triggered.insert(f);
        }
        if let Some(&c) = w.goodwill.get(&f) {
            credit += c;
            goodwill_triggered.insert(f);
        }
    }
    HeuristicScore {
        raw,
        credit,
        net: raw.saturating_sub(credit),
        triggered,
        goodwill_triggered,
    }
}

/// Compare a score against the selected tier.
pub fn classify_tier(
    s: &HeuristicScore,
    tiers: &ThresholdTiers,
    tier: TierLevel,
) -> Classification {
    if s.net >= tiers.value(tier) {
        Classification::Suspicious
    } else {
        Classification::Benign
    }
}
