//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS line (run with `--nocapture` to see them).
//!
//! Every expected value here is produced by an independent oracle — naive
//! searches, recursive backtracking, hand-rolled set arithmetic, manual
//! recounts — never by the code path under test.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fpguard_core::engine::{dynamic_features, DetectorSet, Engine, EngineConfig};
use fpguard_core::heuristics::{default_profile, FeatureId, TierLevel};
use fpguard_core::integrity::{build_baseline, CheckResult};
use fpguard_core::matcher::{compile, MatchKind};
use fpguard_core::netwindow::{parse_stream, score_windows, WindowParams};
use fpguard_core::sandbox::{diff_abilities, execute, BehaviorKind};
use fpguard_core::sigdb::{ExactSignature, GenericSignature, PatternToken, SignatureDb};
use fpguard_core::sigselect::{extract_candidates, score_candidates, select_signature};
use fpguard_core::spx::{parse_spx, AbilityManifest, Instruction, Program};
use fpguard_core::verdict::{
    combine, CombinationPolicy, Decision, Evidence, EvidenceCategory, Strength,
};
use fpguard_harness::corpus::{generate_corpus, GeneratedCorpus, Label};
use fpguard_harness::eval::{evaluate, threshold_sweep, EvalConfig};
use fpguard_harness::streams::WORM_BURST;

fn seeded_corpus(dir: &std::path::Path) -> GeneratedCorpus {
    generate_corpus(1, 200, 50, dir).expect("corpus generation")
}

fn base_config(gen: &GeneratedCorpus) -> EvalConfig {
    let (weights, tiers) = default_profile();
    EvalConfig::new(gen.db.clone(), weights, tiers)
}

/// Criterion 1: evaluation counts equal an independent per-file replay,
/// and the FP-rate denominator is exactly the benign population.
#[test]
fn c01_fp_rate_formula_fidelity() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let gen = seeded_corpus(dir.path());
    let config = base_config(&gen);

    let result = evaluate(&gen.manifest, &config).unwrap();
    let m = &result.metrics;

    // Independent replay: fresh engine, manual counting.
    let (weights, tiers) = default_profile();
    let engine = Engine::new(&gen.db, weights, tiers, EngineConfig::default());
    let (mut tp, mut fp, mut tn, mut fn_count) = (0usize, 0usize, 0usize, 0usize);
    let mut benign_total = 0usize;
    for entry in &gen.manifest.entries {
        let data = std::fs::read(gen.manifest.resolve(entry)).unwrap();
        let report = engine
            .scan_bytes(&entry.path, &data, entry.path.ends_with(".spx"))
            .unwrap();
        let infected = report.verdict.decision == Decision::Infected;
        match entry.label {
            Label::Benign => {
                benign_total += 1;
                if infected {
                    fp += 1;
                } else {
                    tn += 1;
                }
            }
            Label::Malicious => {
                if infected {
                    tp += 1;
                } else {
                    fn_count += 1;
                }
            }
        }
    }

    assert_eq!((m.tp, m.fp, m.tn, m.fn_count), (tp, fp, tn, fn_count));
    assert_eq!(benign_total, 200);
    assert_eq!(
        m.fp + m.tn,
        200,
        "fp_rate denominator must be the benign count"
    );
    assert_eq!(m.fp_rate, fp as f64 / 200.0);
    assert_eq!(m.tp + m.fp + m.tn + m.fn_count, 250);
    assert!(
        started.elapsed() < Duration::from_secs(10),
        "criterion must run in under 10 s"
    );
    println!("acceptance C01 fp-rate formula fidelity: PASS");
}

fn naive_exact(patterns: &[Vec<u8>], data: &[u8]) -> Vec<(usize, usize, usize)> {
    let mut hits = Vec::new();
    for (id, pat) in patterns.iter().enumerate() {
        if pat.is_empty() || pat.len() > data.len() {
            continue;
        }
        for start in 0..=data.len() - pat.len() {
            if &data[start..start + pat.len()] == pat.as_slice() {
                hits.push((start, id, pat.len()));
            }
        }
    }
    hits.sort_unstable();
    hits
}

fn backtrack_min_end(tokens: &[PatternToken], data: &[u8], pos: usize) -> Option<usize> {
    let Some((tok, rest)) = tokens.split_first() else {
        return Some(pos);
    };
    match tok {
        PatternToken::Byte(b) => (pos < data.len() && data[pos] == *b)
            .then(|| backtrack_min_end(rest, data, pos + 1))
            .flatten(),
        PatternToken::AnyByte => (pos < data.len())
            .then(|| backtrack_min_end(rest, data, pos + 1))
            .flatten(),
        PatternToken::Gap { min, max } => {
            let mut best = None;
            for g in *min..=*max {
                let p = pos + g as usize;
                if p > data.len() {
                    break;
                }
                if let Some(end) = backtrack_min_end(rest, data, p) {
                    best = Some(best.map_or(end, |b: usize| b.min(end)));
                }
            }
            best
        }
    }
}

/// Criterion 2: 10,000 random exact cases against naive search and 500
/// random generic cases against a backtracking oracle, zero discrepancies.
#[test]
fn c02_matcher_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);

    for case in 0..10_000 {
        let alphabet = rng.random_range(2..=5u8);
        let n_patterns = rng.random_range(1..=8);
        let patterns: Vec<Vec<u8>> = (0..n_patterns)
            .map(|_| {
                let len = rng.random_range(1..=10);
                (0..len)
                    .map(|_| b'A' + rng.random_range(0..alphabet))
                    .collect()
            })
            .collect();
        let data: Vec<u8> = (0..rng.random_range(0..=1024))
            .map(|_| b'A' + rng.random_range(0..alphabet))
            .collect();

        let db = SignatureDb {
            exact: patterns
                .iter()
                .enumerate()
                .map(|(i, bytes)| ExactSignature {
                    name: format!("s{i:02}"),
                    bytes: bytes.clone(),
                })
                .collect(),
            version: 1,
            ..SignatureDb::default()
        };
        let got: Vec<(usize, usize, usize)> = compile(&db)
            .scan_bytes(&data)
            .into_iter()
            .map(|h| (h.offset, h.signature_name[1..].parse().unwrap(), h.length))
            .collect();
        assert_eq!(got, naive_exact(&patterns, &data), "exact case {case}");
    }

    for case in 0..500 {
        let alphabet = rng.random_range(2..=3u8);
        // Patterns may open or close with a wildcard byte, and occasionally
        // carry fewer than two concrete bytes (the unanchored slow path).
        let edge = |rng: &mut ChaCha8Rng| {
            if rng.random_bool(0.75) {
                PatternToken::Byte(b'A' + rng.random_range(0..alphabet))
            } else {
                PatternToken::AnyByte
            }
        };
        let mut tokens = vec![edge(&mut rng)];
        for _ in 0..rng.random_range(0..=8) {
            let tok = match rng.random_range(0..10) {
                0..=5 => PatternToken::Byte(b'A' + rng.random_range(0..alphabet)),
                6..=7 => PatternToken::AnyByte,
                _ => {
                    let min = rng.random_range(0..=4);
                    PatternToken::Gap {
                        min,
                        max: min + rng.random_range(0..=5),
                    }
                }
            };
            if matches!(tok, PatternToken::Gap { .. })
                && matches!(tokens.last(), Some(PatternToken::Gap { .. }))
            {
                continue;
            }
            tokens.push(tok);
        }
        tokens.push(edge(&mut rng));
        let data: Vec<u8> = (0..rng.random_range(0..=1024))
            .map(|_| b'A' + rng.random_range(0..alphabet))
            .collect();

        let db = SignatureDb {
            generic: vec![GenericSignature {
                name: "g".into(),
                tokens: tokens.clone(),
            }],
            version: 1,
            ..SignatureDb::default()
        };
        let got = compile(&db)
            .scan_bytes(&data)
            .into_iter()
            .find(|h| h.kind == MatchKind::Generic)
            .map(|h| (h.offset, h.length));
        let expected =
            (0..data.len()).find_map(|s| backtrack_min_end(&tokens, &data, s).map(|e| (s, e - s)));
        assert_eq!(got, expected, "generic case {case} tokens {tokens:?}");
    }

    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(60),
        "ran {elapsed:?}, budget 60 s"
    );
    println!("acceptance C02 matcher oracle equivalence (10000 exact + 500 generic): PASS");
}

/// Criterion 3: rebaseline-then-recheck of 1,000 unmodified files yields 0
/// Modified; 1,000 single-byte flips yield 1,000 Modified.
#[test]
fn c03_integrity_nil_fp() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut contents = Vec::with_capacity(1000);
    for i in 0..1000 {
        let mut data = vec![0u8; rng.random_range(16..=2048)];
        rng.fill_bytes(&mut data);
        std::fs::write(dir.path().join(format!("f{i:04}.bin")), &data).unwrap();
        contents.push(data);
    }

    let store = build_baseline(dir.path()).unwrap();
    assert_eq!(store.len(), 1000);

    let modified = contents
        .iter()
        .enumerate()
        .filter(|(i, data)| store.check(&format!("f{i:04}.bin"), data) != CheckResult::Unmodified)
        .count();
    assert_eq!(modified, 0, "unmodified files must never be flagged");

    let mut flagged = 0;
    for (i, data) in contents.iter().enumerate() {
        let mut flipped = data.clone();
        let pos = rng.random_range(0..flipped.len());
        flipped[pos] ^= 1 + rng.random_range(0..=254u8);
        if store.check(&format!("f{i:04}.bin"), &flipped) == CheckResult::Modified {
            flagged += 1;
        }
    }
    assert_eq!(flagged, 1000, "every single-byte flip must be detected");
    println!("acceptance C03 integrity NIL false positives: PASS");
}

/// Criterion 4: over thresholds 2..12, fp never increases and fn never
/// decreases, with at least one strict move on each side.
#[test]
fn c04_threshold_tradeoff() {
    let dir = tempfile::tempdir().unwrap();
    let gen = seeded_corpus(dir.path());
    let mut config = base_config(&gen);
    config.engine.policy = CombinationPolicy {
        k_confirm: 1,
        ..CombinationPolicy::default()
    };
    config.engine.detectors = DetectorSet {
        heuristic_static: true,
        heuristic_dynamic: true,
        ..DetectorSet::NONE
    };

    let rows = threshold_sweep(&gen.manifest, &config, &[2, 4, 6, 8, 10, 12]).unwrap();
    let fps: Vec<usize> = rows.iter().map(|r| r.metrics.fp).collect();
    let fns: Vec<usize> = rows.iter().map(|r| r.metrics.fn_count).collect();

    assert!(
        fps.windows(2).all(|w| w[0] >= w[1]),
        "fp must be non-increasing: {fps:?}"
    );
    assert!(
        fns.windows(2).all(|w| w[0] <= w[1]),
        "fn must be non-decreasing: {fns:?}"
    );
    assert!(
        fps.windows(2).any(|w| w[0] > w[1]),
        "need a strict fp decrease: {fps:?}"
    );
    assert!(
        fns.windows(2).any(|w| w[0] < w[1]),
        "need a strict fn increase: {fns:?}"
    );
    println!("acceptance C04 threshold tradeoff (fp {fps:?}, fn {fns:?}): PASS");
}

/// Criterion 5: integrity-only and exact-only raise no FPs, heuristics
/// alone at the low tier do, and the mixed policy beats heuristics-only
/// while keeping recall at 0.95 or better.
#[test]
fn c05_mixed_method_dominance() {
    let dir = tempfile::tempdir().unwrap();
    let gen = seeded_corpus(dir.path());
    let baseline = build_baseline(dir.path()).unwrap();

    let run = |detectors: DetectorSet, k: usize, integrity_alone: bool, with_baseline: bool| {
        let mut config = base_config(&gen);
        config.engine.tier = TierLevel::Low;
        config.engine.detectors = detectors;
        config.engine.policy = CombinationPolicy {
            k_confirm: k,
            exact_is_sufficient: true,
            integrity_alone_alarms: integrity_alone,
        };
        if with_baseline {
            config.baseline = Some(baseline.clone());
        }
        evaluate(&gen.manifest, &config).unwrap().metrics
    };

    let integrity_only = run(
        DetectorSet {
            integrity: true,
            ..DetectorSet::NONE
        },
        1,
        true,
        true,
    );
    let exact_only = run(
        DetectorSet {
            exact: true,
            ..DetectorSet::NONE
        },
        1,
        false,
        false,
    );
    let heuristic_low = run(
        DetectorSet {
            heuristic_static: true,
            heuristic_dynamic: true,
            ..DetectorSet::NONE
        },
        1,
        false,
        false,
    );
    let mixed = run(DetectorSet::ALL, 2, false, true);

    assert_eq!(integrity_only.fp, 0, "integrity checking must raise no FPs");
    assert_eq!(exact_only.fp, 0, "exact signatures must raise no FPs");
    assert!(
        heuristic_low.fp >= 1,
        "tricky-benign subset must trip heuristics-only"
    );
    assert!(
        mixed.fp < heuristic_low.fp,
        "mixed ({}) must beat heuristics-only ({})",
        mixed.fp,
        heuristic_low.fp
    );
    let recall = mixed.tp as f64 / (mixed.tp + mixed.fn_count) as f64;
    assert!(recall >= 0.95, "mixed recall {recall} below 0.95");
    println!(
        "acceptance C05 mixed-method dominance (fp: integrity {} exact {} heuristic {} mixed {}, recall {recall:.3}): PASS",
        integrity_only.fp, exact_only.fp, heuristic_low.fp, mixed.fp
    );
}

/// Criterion 6: all 2^7 evidence-category subsets x k in {1,2,3} match an
/// independent statement of the combination rule — 384 cases.
#[test]
fn c06_verdict_k_of_n_exhaustive() {
    let mut cases = 0;
    for k in 1..=3usize {
        let policy = CombinationPolicy {
            k_confirm: k,
            ..CombinationPolicy::default()
        };
        for mask in 0u32..(1 << 7) {
            let categories: Vec<EvidenceCategory> = EvidenceCategory::ALL
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &c)| c)
                .collect();
            let evidence: Vec<Evidence> = categories
                .iter()
                .map(|&c| Evidence::new(c, "case", Strength::Suggestive))
                .collect();
            let got = combine(&evidence, &policy).decision;

            // Rule, restated from scratch: an exact hit confirms; otherwise
            // k distinct categories confirm; a lone integrity mismatch and
            // any 1..k-1 categories stay suspicious; nothing is clean.
            let expected = if categories.contains(&EvidenceCategory::ExactSig) {
                Decision::Infected
            } else if categories.is_empty() {
                Decision::Clean
            } else if categories == [EvidenceCategory::IntegrityModified] {
                Decision::Suspicious
            } else if categories.len() >= k {
                Decision::Infected
            } else {
                Decision::Suspicious
            };
            assert_eq!(got, expected, "k={k} categories={categories:?}");
            cases += 1;
        }
    }
    assert_eq!(cases, 384);
    println!("acceptance C06 verdict k-of-n exhaustiveness (384 cases): PASS");
}

fn random_program(rng: &mut ChaCha8Rng) -> Program {
    let declared: BTreeSet<BehaviorKind> = BehaviorKind::ALL
        .iter()
        .copied()
        .filter(|_| rng.random_bool(0.4))
        .collect();
    let abilities = AbilityManifest {
        declared,
        present: rng.random_bool(0.7),
    };
    let mut code = Vec::new();
    for _ in 0..rng.random_range(0..=20) {
        code.push(match rng.random_range(0..11) {
            0 => Instruction::Open("f".into()),
            1 => Instruction::Read,
            2 => Instruction::Write,
            3 => Instruction::Close,
            4 => Instruction::Format,
            5 => Instruction::MoveSys("sys/x".into()),
            6 => Instruction::CopySelf,
            7 => Instruction::NetSend(rng.random_range(1..5)),
            8 => Instruction::Decrypt,
            9 => Instruction::Set("r0".into(), 1),
            _ => Instruction::Nop,
        });
    }
    if rng.random_bool(0.3) {
        // Tail loop so some runs exhaust the budget.
        code.insert(0, Instruction::Label("top".into()));
        code.push(Instruction::Jmp("top".into()));
    }
    Program {
        name: "rnd".into(),
        abilities,
        strings: Vec::new(),
        code,
    }
}

/// Criterion 7: generated programs terminate within budget with bit-stable
/// traces; ability diffs match a set-difference oracle on 1,000 random
/// pairs; the violation feature fires exactly when the diff is non-empty.
#[test]
fn c07_sandbox_guarantees() {
    let dir = tempfile::tempdir().unwrap();
    let gen = seeded_corpus(dir.path());
    let budget = 10_000;
    for entry in &gen.manifest.entries {
        let text = std::fs::read_to_string(gen.manifest.resolve(entry)).unwrap();
        let program = parse_spx(&text).unwrap();
        let first = execute(&program, budget);
        assert!(first.steps_executed <= budget);
        for _ in 0..2 {
            assert_eq!(
                execute(&program, budget),
                first,
                "{} trace unstable",
                entry.path
            );
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..1000 {
        let program = random_program(&mut rng);
        let budget = rng.random_range(1..=200);
        let trace = execute(&program, budget);
        assert!(
            trace.steps_executed <= budget,
            "case {case} ran past its budget"
        );

        let diff = diff_abilities(&program, &trace);
        // Set-difference oracle, recomputed by hand.
        let mut expected = BTreeSet::new();
        for event in &trace.events {
            if !program.abilities.declared.contains(&event.kind) {
                expected.insert(event.kind);
            }
        }
        assert_eq!(diff, expected, "case {case}");

        let features = dynamic_features(&trace, &diff);
        assert_eq!(
            features.contains(&FeatureId::AbilityViolation),
            !diff.is_empty(),
            "case {case}: violation feature must track the diff"
        );
    }
    println!("acceptance C07 sandbox guarantees (corpus stability + 1000 diff cases): PASS");
}

/// Criterion 8: when a zero-benign-hit candidate exists, selection always
/// picks a zero-score candidate, and the resulting signature produces zero
/// exact hits on that benign corpus end to end.
#[test]
fn c08_signature_selection_fp_guarantee() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (n, stride) = (16usize, 8usize);
    for case in 0..100 {
        let corpus: Vec<Vec<u8>> = (0..rng.random_range(4..=12))
            .map(|_| {
                let mut f = vec![0u8; rng.random_range(128..=1024)];
                rng.fill_bytes(&mut f);
                f
            })
            .collect();

        let mut sample = if case % 2 == 0 {
            let mut s = vec![0u8; rng.random_range(64..=256)];
            rng.fill_bytes(&mut s);
            s
        } else {
            // Adversarial: stitch the sample out of benign corpus content so
            // most candidates score above zero.
            let mut s = Vec::new();
            while s.len() < 128 {
                let file = &corpus[rng.random_range(0..corpus.len())];
                let at = rng.random_range(0..file.len().saturating_sub(32).max(1));
                let take = (at + 32).min(file.len());
                s.extend_from_slice(&file[at..take]);
            }
            s
        };
        // Plant one stride-aligned gram of fresh random bytes.
        let slots = (sample.len() - n) / stride;
        let at = stride * rng.random_range(0..=slots);
        rng.fill_bytes(&mut sample[at..at + n]);

        // Precondition: a zero-hit candidate exists (checked naively).
        let zero_exists = (0..=(sample.len() - n) / stride).any(|k| {
            let gram = &sample[k * stride..k * stride + n];
            corpus.iter().all(|f| !f.windows(n).any(|w| w == gram))
        });
        assert!(
            zero_exists,
            "case {case}: construction must admit a zero-hit candidate"
        );

        let candidates = extract_candidates(&sample, n, stride).unwrap();
        let scored = score_candidates(candidates, &corpus).unwrap();
        let winner = select_signature(&scored).unwrap();
        assert_eq!(winner.benign_hits, 0, "case {case}");
        assert_eq!(winner.score, 0.0, "case {case}");

        // End to end: the selected signature never fires on the corpus.
        let db = SignatureDb {
            exact: vec![ExactSignature {
                name: "sel".into(),
                bytes: winner.bytes.clone(),
            }],
            version: 1,
            ..SignatureDb::default()
        };
        let matcher = compile(&db);
        for (i, file) in corpus.iter().enumerate() {
            let exact_hits = matcher
                .scan_bytes(file)
                .iter()
                .filter(|h| h.kind == MatchKind::Exact)
                .count();
            assert_eq!(
                exact_hits, 0,
                "case {case}: benign file {i} matched the signature"
            );
        }
    }
    println!("acceptance C08 signature selection FP guarantee (100 cases): PASS");
}

/// Criterion 9: the worm burst triggers FANOUT_HIGH at W=1000 ms but not
/// at 250 ms, and the alarm timestamp grows with the window length.
#[test]
fn c09_network_window_tradeoff() {
    let packets = parse_stream(WORM_BURST).unwrap();
    let (weights, _) = default_profile();
    let params = WindowParams::default();

    let alarm = |window_ms: u64| {
        score_windows(&packets, window_ms, &weights, &params)
            .unwrap()
            .into_iter()
            .find(|w| w.features.contains(&FeatureId::FanoutHigh))
            .map(|w| w.window_start + w.window_len)
    };

    assert_eq!(alarm(250), None, "250 ms windows must miss the fan-out");
    assert!(
        alarm(1000).is_some(),
        "1000 ms windows must catch the fan-out"
    );
    let alarms: Vec<u64> = [250u64, 500, 1000, 2000]
        .iter()
        .filter_map(|&w| alarm(w))
        .collect();
    assert_eq!(alarms.len(), 3);
    assert!(
        alarms.windows(2).all(|w| w[0] < w[1]),
        "alarm time must grow with W: {alarms:?}"
    );
    println!("acceptance C09 network window tradeoff (alarms {alarms:?}): PASS");
}

/// Criterion 10: scanning 100 MB against 1,000 signatures sustains at
/// least 50 MB/s, and stays within 3x of the 10-signature throughput.
#[test]
fn c10_throughput_bar() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut data = vec![0u8; 100 << 20];
    rng.fill_bytes(&mut data);

    let patterns: Vec<Vec<u8>> = (0..1000)
        .map(|_| {
            let mut p = vec![0u8; 16];
            rng.fill_bytes(&mut p);
            p
        })
        .collect();
    let db_of = |pats: &[Vec<u8>]| SignatureDb {
        exact: pats
            .iter()
            .enumerate()
            .map(|(i, bytes)| ExactSignature {
                name: format!("s{i:04}"),
                bytes: bytes.clone(),
            })
            .collect(),
        version: 1,
        ..SignatureDb::default()
    };

    let throughput = |db: &SignatureDb| -> f64 {
        let matcher = compile(db);
        let mut rates = Vec::new();
        let mut first_hits = None;
        for _ in 0..3 {
            let started = Instant::now();
            let hits = matcher.scan_bytes(&data);
            let secs = started.elapsed().as_secs_f64();
            rates.push(data.len() as f64 / secs);
            match &first_hits {
                None => first_hits = Some(hits),
                Some(f) => assert_eq!(f, &hits, "scan must be reproducible"),
            }
        }
        rates.sort_by(f64::total_cmp);
        rates[1]
    };

    let big = throughput(&db_of(&patterns));
    let small = throughput(&db_of(&patterns[..10]));
    let mb = 1024.0 * 1024.0;
    assert!(
        big >= 50.0 * mb,
        "1000-signature scan too slow: {:.1} MB/s",
        big / mb
    );
    assert!(
        big * 3.0 >= small,
        "1000 sigs ({:.0} MB/s) must be within 3x of 10 sigs ({:.0} MB/s)",
        big / mb,
        small / mb
    );
    println!(
        "acceptance C10 throughput bar (1000 sigs {:.0} MB/s, 10 sigs {:.0} MB/s): PASS",
        big / mb,
        small / mb
    );
}
