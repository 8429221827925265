//! Matcher correctness against independent oracles.
//!
//! The exact-match oracle is a per-signature sliding-window search; the
//! generic oracle is plain recursive backtracking. Neither shares any code
//! with the compiled matcher.

use fpguard_core::matcher::{compile, MatchKind};
use fpguard_core::sigdb::{ExactSignature, GenericSignature, PatternToken, SignatureDb};
use proptest::prelude::*;

fn exact_db(patterns: &[Vec<u8>]) -> SignatureDb {
    SignatureDb {
        exact: patterns
            .iter()
            .enumerate()
            .map(|(i, bytes)| ExactSignature {
                name: format!("s{i:03}"),
                bytes: bytes.clone(),
            })
            .collect(),
        version: 1,
        ..SignatureDb::default()
    }
}

/// Every occurrence of every pattern, by brute force.
fn naive_exact(patterns: &[Vec<u8>], data: &[u8]) -> Vec<(String, usize, usize)> {
    let mut hits = Vec::new();
    for (i, pat) in patterns.iter().enumerate() {
        if pat.is_empty() || pat.len() > data.len() {
            continue;
        }
        for start in 0..=data.len() - pat.len() {
            if &data[start..start + pat.len()] == pat.as_slice() {
                hits.push((format!("s{i:03}"), start, pat.len()));
            }
        }
    }
    hits.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
    hits
}

/// Minimal end of a backtracking match of `tokens` at `pos`.
fn backtrack(tokens: &[PatternToken], data: &[u8], pos: usize) -> Option<usize> {
    let Some((tok, rest)) = tokens.split_first() else {
        return Some(pos);
    };
    match tok {
        PatternToken::Byte(b) => {
            if pos < data.len() && data[pos] == *b {
                backtrack(rest, data, pos + 1)
            } else {
                None
            }
        }
        PatternToken::AnyByte => {
            if pos < data.len() {
                backtrack(rest, data, pos + 1)
            } else {
                None
            }
        }
        PatternToken::Gap { min, max } => {
            let mut best: Option<usize> = None;
            for g in *min..=*max {
                let p = pos + g as usize;
                if p > data.len() {
                    break;
                }
                if let Some(end) = backtrack(rest, data, p) {
                    best = Some(best.map_or(end, |b| b.min(end)));
                }
            }
            best
        }
    }
}

/// Leftmost-then-shortest generic match by exhaustive search.
fn oracle_generic(tokens: &[PatternToken], data: &[u8]) -> Option<(usize, usize)> {
    (0..data.len()).find_map(|start| backtrack(tokens, data, start).map(|end| (start, end - start)))
}

fn small_patterns() -> impl Strategy<Value = Vec<Vec<u8>>> {
    prop::collection::vec(prop::collection::vec(65u8..68, 1..6), 1..6)
}

fn small_data() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(65u8..68, 0..600)
}

fn middle_token() -> impl Strategy<Value = PatternToken> {
    prop_oneof![
        3 => (65u8..67).prop_map(PatternToken::Byte),
        1 => Just(PatternToken::AnyByte),
        1 => (0u32..6, 0u32..6).prop_map(|(a, b)| PatternToken::Gap {
            min: a.min(b),
            max: a.max(b),
        }),
    ]
}

fn edge_token() -> impl Strategy<Value = PatternToken> {
    prop_oneof![
        3 => (65u8..67).prop_map(PatternToken::Byte),
        1 => Just(PatternToken::AnyByte),
    ]
}

fn token_seq() -> impl Strategy<Value = Vec<PatternToken>> {
    (
        edge_token(),
        prop::collection::vec(middle_token(), 0..7),
        edge_token(),
    )
        .prop_map(|(first, middle, last)| {
            let mut tokens = vec![first];
            for tok in middle {
                let both_gaps = matches!(tok, PatternToken::Gap { .. })
                    && matches!(tokens.last(), Some(PatternToken::Gap { .. }));
                if !both_gaps {
                    tokens.push(tok);
                }
            }
            tokens.push(last);
            tokens
        })
}

proptest! {
    #[test]
    fn exact_matches_agree_with_naive_search(
        patterns in small_patterns(),
        data in small_data(),
    ) {
        let matcher = compile(&exact_db(&patterns));
        let got: Vec<(String, usize, usize)> = matcher
            .scan_bytes(&data)
            .into_iter()
            .map(|h| (h.signature_name, h.offset, h.length))
            .collect();
        prop_assert_eq!(got, naive_exact(&patterns, &data));
    }

    #[test]
    fn generic_matches_agree_with_backtracking(
        tokens in token_seq(),
        data in prop::collection::vec(65u8..67, 0..400),
    ) {
        let db = SignatureDb {
            generic: vec![GenericSignature { name: "g".into(), tokens: tokens.clone() }],
            version: 1,
            ..SignatureDb::default()
        };
        let matcher = compile(&db);
        let got = matcher
            .scan_bytes(&data)
            .into_iter()
            .find(|h| h.kind == MatchKind::Generic)
            .map(|h| (h.offset, h.length));
        prop_assert_eq!(got, oracle_generic(&tokens, &data));
    }

    #[test]
    fn chunked_scan_agrees_with_whole_scan(
        patterns in small_patterns(),
        tokens in token_seq(),
        data in prop::collection::vec(65u8..68, 0..2000),
        chunk in 16usize..200,
    ) {
        let mut db = exact_db(&patterns);
        db.generic.push(GenericSignature { name: "g".into(), tokens });
        let matcher = compile(&db);
        let whole = matcher.scan_bytes(&data);
        let chunked = matcher.scan_reader_chunked(&data[..], chunk).unwrap();
        prop_assert_eq!(whole, chunked);
    }
}

#[test]
fn thousand_signatures_against_random_megabyte() {
    // Deterministic xorshift data; signatures sampled from the data so some
    // hits actually exist, plus fresh random ones that mostly will not.
    let mut state = 0x0123_4567_89ab_cdefu64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let data: Vec<u8> = (0..1 << 20).map(|_| next() as u8).collect();
    let mut patterns: Vec<Vec<u8>> = Vec::with_capacity(1000);
    for i in 0..1000 {
        if i % 4 == 0 {
            let at = (next() as usize) % (data.len() - 16);
            patterns.push(data[at..at + 16].to_vec());
        } else {
            patterns.push((0..16).map(|_| next() as u8).collect());
        }
    }

    let matcher = compile(&exact_db(&patterns));
    let got: Vec<(String, usize, usize)> = matcher
        .scan_bytes(&data)
        .into_iter()
        .map(|h| (h.signature_name, h.offset, h.length))
        .collect();
    let expected = naive_exact(&patterns, &data);
    assert!(!expected.is_empty(), "sampled signatures must hit");
    assert_eq!(got, expected);
}
