//! Multi-evidence verdict combination.
//!
//! Each detection method contributes evidence in its own category. An exact
//! signature hit confirms on its own (policy-controlled); everything else is
//! suggestive and must be corroborated by `k_confirm` distinct categories
//! before a file is called Infected. One uncorroborated category is
//! Suspicious — a triage state the user can resolve — and an integrity
//! mismatch alone stays Suspicious by default, since a modified file may
//! simply have been edited.
//!
//! Counting categories rather than raw findings is deliberate: two generic
//! signature hits are correlated, two independent methods are not.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// The independent detection methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EvidenceCategory {
    ExactSig,
    GenericSig,
    IntegrityModified,
    HeuristicStatic,
    HeuristicDynamic,
    AbilityViolation,
    NetworkAnomaly,
}

impl EvidenceCategory {
    pub const ALL: [EvidenceCategory; 7] = [
        EvidenceCategory::ExactSig,
        EvidenceCategory::GenericSig,
        EvidenceCategory::IntegrityModified,
        EvidenceCategory::HeuristicStatic,
        EvidenceCategory::HeuristicDynamic,
        EvidenceCategory::AbilityViolation,
        EvidenceCategory::NetworkAnomaly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvidenceCategory::ExactSig => "ExactSig",
            EvidenceCategory::GenericSig => "GenericSig",
            EvidenceCategory::IntegrityModified => "IntegrityModified",
            EvidenceCategory::HeuristicStatic => "HeuristicStatic",
            EvidenceCategory::HeuristicDynamic => "HeuristicDynamic",
            EvidenceCategory::AbilityViolation => "AbilityViolation",
            EvidenceCategory::NetworkAnomaly => "NetworkAnomaly",
        }
    }
}

impl fmt::Display for EvidenceCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How much weight a finding carries on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Strength {
    Confirming,
    Suggestive,
}

/// One finding from one detector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Evidence {
    pub category: EvidenceCategory,
    /// Human-readable provenance: signature name, feature list, path.
    pub detail: String,
    pub strength: Strength,
}

impl Evidence {
    /// Exact signature hits are always confirming.
    pub fn new(category: EvidenceCategory, detail: impl Into<String>, strength: Strength) -> Self {
        let strength = if category == EvidenceCategory::ExactSig {
            Strength::Confirming
        } else {
            strength
        };
        Evidence {
            category,
            detail: detail.into(),
            strength,
        }
    }

    pub fn confirming(category: EvidenceCategory, detail: impl Into<String>) -> Self {
        Evidence::new(category, detail, Strength::Confirming)
    }

    pub fn suggestive(category: EvidenceCategory, detail: impl Into<String>) -> Self {
        Evidence::new(category, detail, Strength::Suggestive)
    }
}

/// How evidence combines into a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CombinationPolicy {
    /// Distinct suggestive categories needed to confirm an infection.
    pub k_confirm: usize,
    /// Whether one exact signature hit is enough on its own. When disabled,
    /// an exact hit counts as one category like any other.
    pub exact_is_sufficient: bool,
    /// Whether an integrity mismatch alarms without corroboration.
    pub integrity_alone_alarms: bool,
}

impl Default for CombinationPolicy {
    fn default() -> Self {
        CombinationPolicy {
            k_confirm: 2,
            exact_is_sufficient: true,
            integrity_alone_alarms: false,
        }
    }
}

/// Final call for one file, ordered: Clean < Suspicious < Infected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Decision {
    Clean,
    Suspicious,
    Infected,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Clean => f.write_str("Clean"),
            Decision::Suspicious => f.write_str("Suspicious"),
            Decision::Infected => f.write_str("Infected"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub decision: Decision,
    pub evidence: Vec<Evidence>,
    pub overridden_by_user: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerdictError {
    #[error("feedback applies only to Suspicious verdicts, not {decision}")]
    NotApplicable { decision: Decision },
}

/// Combine evidence under a policy.
///
/// Infected when any confirming evidence applies (an exact hit under
/// `exact_is_sufficient`, a high-tier heuristic score, an integrity mismatch
/// under `integrity_alone_alarms`) or when at least `k_confirm` distinct
/// suggestive categories agree. A single suggestive category — or an
/// integrity mismatch alone — is Suspicious. No evidence is Clean.
pub fn combine(evidence: &[Evidence], policy: &CombinationPolicy) -> Verdict {
    let has_exact = evidence
        .iter()
        .any(|e| e.category == EvidenceCategory::ExactSig);
    let has_integrity = evidence
        .iter()
        .any(|e| e.category == EvidenceCategory::IntegrityModified);
    let confirming_other = evidence
        .iter()
        .any(|e| e.strength == Strength::Confirming && e.category != EvidenceCategory::ExactSig);

    let mut categories: BTreeSet<EvidenceCategory> = evidence
        .iter()
        .filter(|e| e.strength == Strength::Suggestive)
        .map(|e| e.category)
        .collect();
    if has_exact && !policy.exact_is_sufficient {
        categories.insert(EvidenceCategory::ExactSig);
    }

    let confirmed = (has_exact && policy.exact_is_sufficient)
        || confirming_other
        || (has_integrity && policy.integrity_alone_alarms);

    let integrity_alone =
        categories.len() == 1 && categories.contains(&EvidenceCategory::IntegrityModified);

    let decision = if confirmed {
        Decision::Infected
    } else if categories.is_empty() {
        Decision::Clean
    } else if integrity_alone {
        Decision::Suspicious
    } else if categories.len() >= policy.k_confirm {
        Decision::Infected
    } else {
        Decision::Suspicious
    };

    Verdict {
        decision,
        evidence: evidence.to_vec(),
        overridden_by_user: false,
    }
}

/// Resolve a Suspicious verdict with the user's judgment.
pub fn apply_feedback(v: &Verdict, user_says_genuine: bool) -> Result<Verdict, VerdictError> {
    if v.decision != Decision::Suspicious {
        return Err(VerdictError::NotApplicable {
            decision: v.decision,
        });
    }
    Ok(Verdict {
        decision: if user_says_genuine {
            Decision::Clean
        } else {
            Decision::Infected
        },
        evidence: v.evidence.clone(),
        overridden_by_user: true,
    })
}
