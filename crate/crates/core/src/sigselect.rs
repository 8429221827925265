//! Candidate signature extraction and benign-corpus scoring.
//!
//! From a malicious sample, fixed-length candidates are cut at stride
//! intervals, scored by how many benign corpus files contain them, and the
//! least-benign-looking candidate wins. A candidate that never occurs in
//! the benign corpus cannot, by construction, produce an exact-match false
//! positive on that corpus.

use aho_corasick::AhoCorasick;
use serde::Serialize;
use thiserror::Error;

/// Default candidate length.
pub const DEFAULT_N: usize = 16;
/// Default extraction stride.
pub const DEFAULT_STRIDE: usize = 8;
/// Shortest permitted candidate.
pub const MIN_N: usize = 4;

/// One candidate signature cut from a sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub bytes: Vec<u8>,
    /// Offset of the candidate in the originating sample.
    pub offset: usize,
    /// Benign corpus files containing `bytes` as a contiguous substring.
    pub benign_hits: usize,
    /// `benign_hits / benign_file_count`, in `[0, 1]`.
    pub score: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SigSelectError {
    #[error("sample of {len} bytes is shorter than candidate length {n}")]
    SampleTooShort { len: usize, n: usize },
    #[error("benign corpus is empty")]
    EmptyCorpus,
    #[error("no candidates to select from")]
    NoCandidates,
    #[error("{0}")]
    InvalidConfig(String),
}

/// Cut candidates of length `n` at offsets `0, stride, 2*stride, ...`.
/// Duplicate contents are removed, keeping the smallest offset.
pub fn extract_candidates(
    sample: &[u8],
    n: usize,
    stride: usize,
) -> Result<Vec<Candidate>, SigSelectError> {
    if n < MIN_N {
        return Err(SigSelectError::InvalidConfig(format!(
            "candidate length {n} is below the minimum {MIN_N}"
        )));
    }
    if stride == 0 {
        return Err(SigSelectError::InvalidConfig(
            "stride must be at least 1".into(),
        ));
    }
    if sample.len() < n {
        return Err(SigSelectError::SampleTooShort {
            len: sample.len(),
            n,
        });
    }
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let mut offset = 0;
    while offset + n <= sample.len() {
        let bytes = &sample[offset..offset + n];
        if seen.insert(bytes) {
            out.push(Candidate {
                bytes: bytes.to_vec(),
                offset,
                benign_hits: 0,
                score: 0.0,
            });
        }
        offset += stride;
    }
    Ok(out)
}

/// Fill in `benign_hits` and `score` for each candidate: per-file
/// containment counts over the corpus.
pub fn score_candidates(
    mut candidates: Vec<Candidate>,
    benign_corpus: &[Vec<u8>],
) -> Result<Vec<Candidate>, SigSelectError> {
    if benign_corpus.is_empty() {
        return Err(SigSelectError::EmptyCorpus);
    }
    if candidates.is_empty() {
        return Ok(candidates);
    }
    let automaton = AhoCorasick::new(candidates.iter().map(|c| c.bytes.as_slice()))
        .expect("candidate automaton");
    let mut hits = vec![0usize; candidates.len()];
    let mut seen_in_file = vec![false; candidates.len()];
    for file in benign_corpus {
        seen_in_file.fill(false);
        for m in automaton.find_overlapping_iter(file) {
            seen_in_file[m.pattern().as_usize()] = true;
        }
        for (h, seen) in hits.iter_mut().zip(&seen_in_file) {
            *h += usize::from(*seen);
        }
    }
    for (cand, h) in candidates.iter_mut().zip(hits) {
        cand.benign_hits = h;
        cand.score = h as f64 / benign_corpus.len() as f64;
    }
    Ok(candidates)
}

/// Pick the candidate with the minimum score; ties break toward the
/// smallest offset, then the lexicographically smallest bytes.
pub fn select_signature(scored: &[Candidate]) -> Result<Candidate, SigSelectError> {
    scored
        .iter()
        .min_by(|a, b| {
            a.score
                .total_cmp(&b.score)
                .then(a.offset.cmp(&b.offset))
                .then(a.bytes.cmp(&b.bytes))
        })
        .cloned()
        .ok_or(SigSelectError::NoCandidates)
}
