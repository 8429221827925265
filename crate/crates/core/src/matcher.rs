//! Compiled signature matching over byte streams.
//!
//! Exact signatures are compiled into one multi-pattern automaton, so a scan
//! is a single pass over the data regardless of how many signatures are
//! loaded. Every occurrence of every exact signature is reported, overlaps
//! included; deduplication is verdict policy, not matcher policy.
//!
//! Generic (wildcard) signatures report one canonical hit each: the
//! leftmost match, and among alignments at that offset the shortest span.
//! Candidate offsets are located through each signature's anchor pair (its
//! first two concrete bytes) and verified with a layered reachability
//! check, which keeps gap handling linear instead of backtracking.

use std::collections::HashMap;
use std::io::{self, Read};

use aho_corasick::{AhoCorasick, AhoCorasickKind};
use serde::Serialize;

use crate::sigdb::{GenericSignature, PatternToken, SignatureDb};

/// Default window size for [`CompiledMatcher::scan_reader`].
const DEFAULT_CHUNK: usize = 4 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum MatchKind {
    Exact,
    Generic,
}

/// One signature hit in a scanned byte stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchHit {
    pub signature_name: String,
    pub kind: MatchKind,
    /// Byte index of the match start.
    pub offset: usize,
    /// Length of the matched span. Equals the signature length for exact
    /// hits.
    pub length: usize,
}

/// Anchor of a generic signature: the values of its first two concrete byte
/// tokens plus the (inclusive) distance ranges implied by the tokens before
/// and between them.
#[derive(Debug, Clone, Copy)]
struct AnchorPair {
    first: u8,
    second: u8,
    /// Distance from match start to the first anchor byte.
    lead_min: usize,
    lead_max: usize,
    /// Distance from the first anchor byte to the second.
    pair_min: usize,
    pair_max: usize,
}

#[derive(Debug, Clone)]
struct CompiledGeneric {
    name: String,
    tokens: Vec<PatternToken>,
    max_span: usize,
}

fn compute_anchor(tokens: &[PatternToken]) -> Option<AnchorPair> {
    let mut iter = tokens.iter();
    let mut lead = (0usize, 0usize);
    let first = loop {
        match iter.next()? {
            PatternToken::Byte(b) => break *b,
            PatternToken::AnyByte => {
                lead.0 += 1;
                lead.1 += 1;
            }
            PatternToken::Gap { min, max } => {
                lead.0 += *min as usize;
                lead.1 += *max as usize;
            }
        }
    };
    let mut between = (1usize, 1usize);
    let second = loop {
        match iter.next()? {
            PatternToken::Byte(b) => break *b,
            PatternToken::AnyByte => {
                between.0 += 1;
                between.1 += 1;
            }
            PatternToken::Gap { min, max } => {
                between.0 += *min as usize;
                between.1 += *max as usize;
            }
        }
    };
    Some(AnchorPair {
        first,
        second,
        lead_min: lead.0,
        lead_max: lead.1,
        pair_min: between.0,
        pair_max: between.1,
    })
}

/// A signature database compiled for scanning. Immutable and shareable:
/// concurrent scans against one matcher are safe.
pub struct CompiledMatcher {
    automaton: Option<AhoCorasick>,
    exact_names: Vec<String>,
    exact_lens: Vec<usize>,
    generics: Vec<CompiledGeneric>,
    /// Generic signatures grouped by their anchor pair; first-byte
    /// occurrence lists are shared within a scan.
    generic_index: HashMap<(u8, u8), Vec<(usize, AnchorPair)>>,
    /// Signatures with fewer than two concrete bytes (not produced by a
    /// valid database); scanned without an anchor prefilter.
    unanchored: Vec<usize>,
    max_span: usize,
}

/// Compile a signature database. The compiled form recognizes exactly the
/// signatures in `db`.
pub fn compile(db: &SignatureDb) -> CompiledMatcher {
    CompiledMatcher::new(db)
}

impl CompiledMatcher {
    pub fn new(db: &SignatureDb) -> Self {
        let exact_names: Vec<String> = db.exact.iter().map(|s| s.name.clone()).collect();
        let exact_lens: Vec<usize> = db.exact.iter().map(|s| s.bytes.len()).collect();
        let automaton = if db.exact.is_empty() {
            None
        } else {
            // Pinned automaton shape, no prefilter: per-byte scan cost stays
            // flat as the signature set grows, and the transition table
            // stays small enough to remain cache-resident for thousands of
            // signatures. Fall back to the default builder on overflow.
            let patterns: Vec<&[u8]> = db.exact.iter().map(|s| s.bytes.as_slice()).collect();
            let nfa = AhoCorasick::builder()
                .kind(Some(AhoCorasickKind::ContiguousNFA))
                .dense_depth(1)
                .prefilter(false)
                .build(&patterns);
            Some(match nfa {
                Ok(a) => a,
                Err(_) => AhoCorasick::new(&patterns).expect("automaton build"),
            })
        };

        let generics: Vec<CompiledGeneric> = db
            .generic
            .iter()
            .map(|sig: &GenericSignature| CompiledGeneric {
                name: sig.name.clone(),
                tokens: sig.tokens.clone(),
                max_span: sig.max_span(),
            })
            .collect();
        let mut generic_index: HashMap<(u8, u8), Vec<(usize, AnchorPair)>> = HashMap::new();
        let mut unanchored = Vec::new();
        for (i, g) in generics.iter().enumerate() {
            match compute_anchor(&g.tokens) {
                Some(a) => generic_index
                    .entry((a.first, a.second))
                    .or_default()
                    .push((i, a)),
                None => unanchored.push(i),
            }
        }

        let max_span = exact_lens
            .iter()
            .copied()
            .chain(generics.iter().map(|g| g.max_span))
            .max()
            .unwrap_or(1)
            .max(1);

        CompiledMatcher {
            automaton,
            exact_names,
            exact_lens,
            generics,
            generic_index,
            unanchored,
            max_span,
        }
    }

    /// Largest number of bytes any compiled signature can span. Chunked
    /// scans overlap windows by this much so no cross-chunk hit is lost.
    pub fn max_span(&self) -> usize {
        self.max_span
    }

    /// Scan an in-memory buffer, returning every exact hit plus one
    /// canonical hit per matching generic signature, sorted by
    /// (offset, name).
    pub fn scan_bytes(&self, data: &[u8]) -> Vec<MatchHit> {
        let mut hits = Vec::new();
        self.scan_exact_window(data, 0, usize::MAX, &mut hits);
        let mut best: Vec<Option<MatchHit>> = vec![None; self.generics.len()];
        self.scan_generic_window(data, 0, usize::MAX, &mut best);
        hits.extend(best.into_iter().flatten());
        sort_hits(&mut hits);
        hits
    }

    /// Scan a stream in overlapping windows. Equivalent to reading the whole
    /// stream and calling [`scan_bytes`](Self::scan_bytes), without holding
    /// more than one window in memory.
    pub fn scan_reader<R: Read>(&self, reader: R) -> io::Result<Vec<MatchHit>> {
        self.scan_reader_chunked(reader, DEFAULT_CHUNK)
    }

    pub fn scan_reader_chunked<R: Read>(
        &self,
        mut reader: R,
        chunk_size: usize,
    ) -> io::Result<Vec<MatchHit>> {
        let overlap = self.max_span;
        let window_len = chunk_size.max(overlap * 2);

        let mut hits = Vec::new();
        let mut best: Vec<Option<MatchHit>> = vec![None; self.generics.len()];
        let mut buf: Vec<u8> = Vec::with_capacity(window_len + 1);
        let mut base = 0usize; // absolute offset of buf[0]

        read_fill(&mut reader, &mut buf, window_len)?;
        loop {
            // Probe one byte ahead to learn whether this window is the last.
            let mut probe = [0u8; 1];
            let more = buf.len() == window_len && reader.read(&mut probe)? > 0;

            // Hits starting in the final `overlap` bytes are deferred to the
            // next window, where their full span is visible.
            let start_ceil = if more {
                buf.len() - overlap
            } else {
                usize::MAX
            };
            self.scan_exact_window(&buf, base, start_ceil, &mut hits);
            self.scan_generic_window(&buf, base, start_ceil, &mut best);

            if !more {
                break;
            }
            let keep_from = buf.len() - overlap;
            base += keep_from;
            buf.copy_within(keep_from.., 0);
            buf.truncate(overlap);
            buf.push(probe[0]);
            read_fill(&mut reader, &mut buf, window_len)?;
        }

        hits.extend(best.into_iter().flatten());
        sort_hits(&mut hits);
        Ok(hits)
    }

    /// Report exact hits whose window-relative start is below `start_ceil`.
    fn scan_exact_window(
        &self,
        window: &[u8],
        base: usize,
        start_ceil: usize,
        out: &mut Vec<MatchHit>,
    ) {
        let Some(automaton) = &self.automaton else {
            return;
        };
        for m in automaton.find_overlapping_iter(window) {
            if m.start() >= start_ceil {
                continue;
            }
            let id = m.pattern().as_usize();
            out.push(MatchHit {
                signature_name: self.exact_names[id].clone(),
                kind: MatchKind::Exact,
                offset: base + m.start(),
                length: self.exact_lens[id],
            });
        }
    }

    /// For each generic signature without a recorded hit yet, look for its
    /// leftmost-then-shortest match starting below `start_ceil` in this
    /// window.
    fn scan_generic_window(
        &self,
        window: &[u8],
        base: usize,
        start_ceil: usize,
        best: &mut [Option<MatchHit>],
    ) {
        let record = |idx: usize, found: Option<(usize, usize)>, best: &mut [Option<MatchHit>]| {
            if let Some((rel, len)) = found {
                best[idx] = Some(MatchHit {
                    signature_name: self.generics[idx].name.clone(),
                    kind: MatchKind::Generic,
                    offset: base + rel,
                    length: len,
                });
            }
        };

        // First-byte occurrence lists shared by every signature whose
        // anchor starts with that byte.
        let mut occurrences: HashMap<u8, Vec<usize>> = HashMap::new();
        for (&(b1, _), group) in &self.generic_index {
            if group.iter().all(|(idx, _)| best[*idx].is_some()) {
                continue;
            }
            let occ = occurrences
                .entry(b1)
                .or_insert_with(|| memchr::memchr_iter(b1, window).collect());
            for &(idx, anchor) in group {
                if best[idx].is_some() {
                    continue;
                }
                let starts = anchored_candidates(anchor, occ, window, start_ceil);
                let found = verify_candidates(&self.generics[idx].tokens, window, &starts);
                record(idx, found, best);
            }
        }

        for &idx in &self.unanchored {
            if best[idx].is_some() {
                continue;
            }
            let ceil = start_ceil.min(window.len());
            let starts: Vec<usize> = (0..ceil).collect();
            let found = verify_candidates(&self.generics[idx].tokens, window, &starts);
            record(idx, found, best);
        }
    }
}

fn sort_hits(hits: &mut [MatchHit]) {
    hits.sort_by(|a, b| {
        (a.offset, &a.signature_name, a.length, a.kind).cmp(&(
            b.offset,
            &b.signature_name,
            b.length,
            b.kind,
        ))
    });
}

fn read_fill<R: Read>(reader: &mut R, buf: &mut Vec<u8>, target: usize) -> io::Result<()> {
    let mut pos = buf.len();
    buf.resize(target, 0);
    while pos < target {
        let n = reader.read(&mut buf[pos..])?;
        if n == 0 {
            break;
        }
        pos += n;
    }
    buf.truncate(pos);
    Ok(())
}

/// Candidate match starts implied by anchor-pair occurrences, ascending and
/// deduplicated, restricted to starts below `start_ceil`.
fn anchored_candidates(
    a: AnchorPair,
    first_occurrences: &[usize],
    data: &[u8],
    start_ceil: usize,
) -> Vec<usize> {
    let ceil = start_ceil.min(data.len());
    let mut starts = Vec::new();
    for &p1 in first_occurrences {
        if p1 < a.lead_min {
            continue;
        }
        let lo = p1 + a.pair_min;
        if lo >= data.len() {
            continue;
        }
        let hi = (p1 + a.pair_max).min(data.len() - 1);
        if !data[lo..=hi].contains(&a.second) {
            continue;
        }
        let o_lo = p1.saturating_sub(a.lead_max);
        let o_hi = (p1 - a.lead_min).min(ceil.wrapping_sub(1));
        if ceil == 0 || o_lo > o_hi {
            continue;
        }
        starts.extend(o_lo..=o_hi);
    }
    starts.sort_unstable();
    starts.dedup();
    starts
}

/// First candidate (ascending) that actually matches, with its shortest
/// span.
fn verify_candidates(
    tokens: &[PatternToken],
    data: &[u8],
    starts: &[usize],
) -> Option<(usize, usize)> {
    for &start in starts {
        if let Some(end) = min_match_end(tokens, data, start) {
            return Some((start, end - start));
        }
    }
    None
}

/// Smallest end position of a match of `tokens` beginning exactly at
/// `start`, if any. Tracks the set of reachable positions after each token
/// as a bitmap; gap tokens advance it with a prefix-sum window.
fn min_match_end(tokens: &[PatternToken], data: &[u8], start: usize) -> Option<usize> {
    let max_span: usize = tokens
        .iter()
        .map(|t| match t {
            PatternToken::Byte(_) | PatternToken::AnyByte => 1,
            PatternToken::Gap { max, .. } => *max as usize,
        })
        .sum();
    let span = max_span.min(data.len() - start);

    // reach[r]: position start+r is reachable after the tokens so far.
    let mut reach = vec![false; span + 1];
    reach[0] = true;
    for tok in tokens {
        let mut next = vec![false; span + 1];
        let mut any = false;
        match tok {
            PatternToken::Byte(b) => {
                for r in 0..span {
                    if reach[r] && data[start + r] == *b {
                        next[r + 1] = true;
                        any = true;
                    }
                }
            }
            PatternToken::AnyByte => {
                for r in 0..span {
                    if reach[r] {
                        next[r + 1] = true;
                        any = true;
                    }
                }
            }
            PatternToken::Gap { min, max } => {
                let (gmin, gmax) = (*min as usize, *max as usize);
                let mut prefix = vec![0u32; span + 2];
                for r in 0..=span {
                    prefix[r + 1] = prefix[r] + u32::from(reach[r]);
                }
                for (rp, slot) in next.iter_mut().enumerate().skip(gmin) {
                    let r_lo = rp.saturating_sub(gmax);
                    let r_hi = rp - gmin;
                    if prefix[r_hi + 1] > prefix[r_lo] {
                        *slot = true;
                        any = true;
                    }
                }
            }
        }
        if !any {
            return None;
        }
        reach = next;
    }
    reach.iter().position(|&ok| ok).map(|r| start + r)
}
