//! Seeded synthetic corpus generation.
//!
//! A corpus is a directory of SPX programs plus a signature database and a
//! `manifest.tsv` labeling every file. Generation is fully deterministic
//! for a given seed: the same seed produces byte-identical corpora.
//!
//! Benign programs declare abilities matching their behavior and never
//! contain planted signature bytes. One in ten is "tricky": it legitimately
//! opens, reads and writes, mentions the string VIRUS, and carries enough
//! mild static features to cross the low heuristic threshold — the
//! classic single-method false positive. Malicious programs all embed the
//! planted exact signature and come in three behavior archetypes, so every
//! one of them carries at least two independent evidence categories.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use fpguard_core::sandbox::BehaviorKind;
use fpguard_core::sigdb::{
    serialize_db, ExactSignature, GenericSignature, PatternToken, SignatureDb,
};
use fpguard_core::spx::{AbilityManifest, Instruction, Program};

/// Benign-looking vocabulary for names, strings and paths. Nothing here
/// contains `VIRUS` or collides with planted signature bytes.
const WORDS: &[&str] = &[
    "alpha", "beacon", "cache", "delta", "ember", "flag", "grain", "harbor", "index", "jolt",
    "kernel", "lumen", "moss", "nectar", "orbit", "pylon", "quartz", "ridge", "stone", "tide",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Malicious,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Benign => f.write_str("benign"),
            Label::Malicious => f.write_str("malicious"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    /// Path relative to the manifest's directory, forward slashes.
    pub path: String,
    pub label: Label,
}

/// The labeled file list of one corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusManifest {
    /// Directory all entry paths are relative to.
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl CorpusManifest {
    pub fn benign_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.label == Label::Benign)
            .count()
    }

    pub fn malicious_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.label == Label::Malicious)
            .count()
    }

    /// Absolute path of one entry.
    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    /// Serialize to `path<TAB>label` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\n", e.path, e.label));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        fs::write(path, self.to_tsv()).map_err(io_err(path))
    }

    /// Load a manifest; entry paths stay relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut entries: Vec<ManifestEntry> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let Some((p, label)) = raw.split_once('\t') else {
                return Err(CorpusError::Manifest {
                    line,
                    reason: "expected `path<TAB>label`".into(),
                });
            };
            let label = match label.trim() {
                "benign" => Label::Benign,
                "malicious" => Label::Malicious,
                other => {
                    return Err(CorpusError::Manifest {
                        line,
                        reason: format!("unknown label `{other}`"),
                    })
                }
            };
            let p = p.trim().to_string();
            if !seen.insert(p.clone()) {
                return Err(CorpusError::Manifest {
                    line,
                    reason: format!("duplicate path `{p}`"),
                });
            }
            entries.push(ManifestEntry { path: p, label });
        }
        Ok(CorpusManifest { root, entries })
    }
}

/// Everything `generate_corpus` produced.
#[derive(Debug)]
pub struct GeneratedCorpus {
    pub manifest: CorpusManifest,
    /// The signature database written to `db.avdb`, containing the planted
    /// exact signature and the family pattern.
    pub db: SignatureDb,
    /// The planted byte sequence carried by every malicious file.
    pub planted: Vec<u8>,
}

fn manifest_of(kinds: &[BehaviorKind]) -> AbilityManifest {
    AbilityManifest {
        declared: kinds.iter().copied().collect(),
        present: true,
    }
}

fn pad(rng: &mut ChaCha8Rng, code: &mut Vec<Instruction>, max: usize) {
    for _ in 0..rng.random_range(0..=max) {
        if rng.random_bool(0.5) {
            code.push(Instruction::Nop);
        } else {
            code.push(Instruction::Set(
                format!("r{}", rng.random_range(0..4)),
                rng.random_range(-99..100),
            ));
        }
    }
}

fn word(rng: &mut ChaCha8Rng) -> &'static str {
    WORDS.choose(rng).unwrap()
}

fn word_strings(rng: &mut ChaCha8Rng, count: usize) -> Vec<String> {
    (0..count)
        .map(|_| format!("{} {}", word(rng), word(rng)))
        .collect()
}

/// Ordinary benign programs: behavior fully covered by the manifest, no
/// virus-like traits.
fn benign_program(rng: &mut ChaCha8Rng, index: usize) -> Program {
    let mut code = Vec::new();
    let n_strings = rng.random_range(1..4);
    let mut strings = word_strings(rng, n_strings);
    let (name, abilities) = match index % 4 {
        0 => {
            // Reader.
            pad(rng, &mut code, 4);
            code.push(Instruction::Open(format!("etc/{}", word(rng))));
            for _ in 0..rng.random_range(1..4) {
                code.push(Instruction::Read);
            }
            code.push(Instruction::Close);
            (
                "reader",
                manifest_of(&[BehaviorKind::Open, BehaviorKind::Read, BehaviorKind::Close]),
            )
        }
        1 => {
            // Log writer: OPEN/READ/WRITE in order, offset by the goodwill
            // credit for a complete manifest.
            code.push(Instruction::Open(format!("log/{}", word(rng))));
            code.push(Instruction::Read);
            pad(rng, &mut code, 3);
            code.push(Instruction::Write);
            code.push(Instruction::Close);
            (
                "logger",
                manifest_of(&[
                    BehaviorKind::Open,
                    BehaviorKind::Read,
                    BehaviorKind::Write,
                    BehaviorKind::Close,
                ]),
            )
        }
        2 => {
            // Update checker: one declared network send.
            code.push(Instruction::Open(format!("etc/{}.conf", word(rng))));
            code.push(Instruction::Read);
            code.push(Instruction::NetSend(rng.random_range(1..4)));
            strings.push(format!("checking {} feed", word(rng)));
            (
                "updater",
                manifest_of(&[
                    BehaviorKind::Open,
                    BehaviorKind::Read,
                    BehaviorKind::NetSend,
                ]),
            )
        }
        _ => {
            // Idle computation, no declared abilities and no behavior.
            pad(rng, &mut code, 6);
            code.push(Instruction::Nop);
            ("idle", AbilityManifest::default())
        }
    };
    Program {
        name: format!("{name}-{index:04}"),
        abilities,
        strings,
        code,
    }
}

/// The tricky-benign subset: a definitions updater that opens, reads and
/// writes, mentions VIRUS in its strings, and ships MoveSys/Decrypt code
/// paths it never executes. Crosses the low threshold on static features
/// alone, and nothing else.
fn tricky_benign_program(rng: &mut ChaCha8Rng, index: usize) -> Program {
    let mut code = Vec::new();
    code.push(Instruction::Open(format!("defs/{}.db", word(rng))));
    code.push(Instruction::Read);
    pad(rng, &mut code, 2);
    code.push(Instruction::Write);
    code.push(Instruction::Jmp("done".into()));
    // Dead maintenance block: statically visible, never executed.
    code.push(Instruction::MoveSys(format!("sys/{}", word(rng))));
    code.push(Instruction::Decrypt);
    code.push(Instruction::Label("done".into()));
    code.push(Instruction::Close);

    let mut strings = vec![format!("updates VIRUS definitions for {}", word(rng))];
    let extra = rng.random_range(0..3);
    strings.extend(word_strings(rng, extra));
    Program {
        name: format!("av-updater-{index:04}"),
        abilities: manifest_of(&[
            BehaviorKind::Open,
            BehaviorKind::Read,
            BehaviorKind::Write,
            BehaviorKind::Close,
            BehaviorKind::MoveSys,
            BehaviorKind::Decrypt,
        ]),
        strings,
        code,
    }
}

/// Malicious archetypes. Every one embeds the planted signature string.
fn malicious_program(
    rng: &mut ChaCha8Rng,
    index: usize,
    planted_str: &str,
    family_prefix: &str,
    family_suffix: &str,
) -> Program {
    let mut strings = Vec::new();
    let mut code = Vec::new();
    let name;
    let abilities;
    match index % 3 {
        0 => {
            // Replicator: copies itself and formats, declares nothing.
            name = format!("replicator-{index:04}");
            abilities = AbilityManifest::default();
            pad(rng, &mut code, 3);
            code.push(Instruction::CopySelf);
            pad(rng, &mut code, 2);
            if rng.random_bool(0.5) {
                code.push(Instruction::MoveSys("sys/boot".into()));
            }
            code.push(Instruction::Format);
        }
        1 => {
            // Worm: family bytes, partial manifest, endless send loop.
            name = format!("worm-{index:04}");
            abilities = manifest_of(&[BehaviorKind::Open, BehaviorKind::Read]);
            let filler: String = (0..rng.random_range(0..=6))
                .map(|_| char::from(rng.random_range(b'g'..=b'z')))
                .collect();
            strings.push(format!("{family_prefix}{filler}{family_suffix}"));
            code.push(Instruction::Open(format!("home/{}", word(rng))));
            code.push(Instruction::Read);
            code.push(Instruction::Decrypt);
            code.push(Instruction::Label("spin".into()));
            code.push(Instruction::NetSend(rng.random_range(1..9)));
            code.push(Instruction::Jmp("spin".into()));
        }
        _ => {
            // Stealth self-copier: quiet apart from replication.
            name = format!("stealth-{index:04}");
            abilities = AbilityManifest::default();
            pad(rng, &mut code, 5);
            code.push(Instruction::CopySelf);
            pad(rng, &mut code, 2);
        }
    }
    let planted_line = format!("{}{planted_str}{}", word(rng), word(rng));
    let at = rng.random_range(0..=strings.len());
    strings.insert(at, planted_line);
    let extra = rng.random_range(0..2);
    strings.extend(word_strings(rng, extra));
    Program {
        name,
        abilities,
        strings,
        code,
    }
}

/// Generate a corpus under `out_dir`: SPX files in `benign/` and
/// `malicious/`, the signature database as `db.avdb`, and `manifest.tsv`.
/// Deterministic for a given seed.
pub fn generate_corpus(
    seed: u64,
    n_benign: usize,
    n_malicious: usize,
    out_dir: &Path,
) -> Result<GeneratedCorpus, CorpusError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Planted exact signature: 16 bytes of uppercase hex text prefixed PT,
    // which cannot occur in the lowercase benign vocabulary.
    let planted_str: String = {
        let tail: String = (0..14)
            .map(|_| {
                let digits = b"0123456789ABCDEF";
                char::from(digits[rng.random_range(0..digits.len())])
            })
            .collect();
        format!("PT{tail}")
    };
    let planted = planted_str.as_bytes().to_vec();
    let family_prefix = "FAM[";
    let family_suffix = "]KIT";
    let family_tokens: Vec<PatternToken> = family_prefix
        .bytes()
        .map(PatternToken::Byte)
        .chain([PatternToken::Gap { min: 0, max: 12 }])
        .chain(family_suffix.bytes().map(PatternToken::Byte))
        .collect();

    let db = SignatureDb {
        exact: vec![ExactSignature {
            name: format!("planted.{seed:08x}"),
            bytes: planted.clone(),
        }],
        generic: vec![GenericSignature {
            name: "fam.kit".into(),
            tokens: family_tokens,
        }],
        baselines: Vec::new(),
        version: 1,
    };

    let benign_dir = out_dir.join("benign");
    let malicious_dir = out_dir.join("malicious");
    fs::create_dir_all(&benign_dir).map_err(io_err(&benign_dir))?;
    fs::create_dir_all(&malicious_dir).map_err(io_err(&malicious_dir))?;

    let mut entries = Vec::with_capacity(n_benign + n_malicious);
    for i in 0..n_benign {
        let program = if i % 10 == 0 {
            tricky_benign_program(&mut rng, i)
        } else {
            benign_program(&mut rng, i)
        };
        let rel = format!("benign/b{i:04}.spx");
        let path = out_dir.join(&rel);
        fs::write(&path, program.to_spx()).map_err(io_err(&path))?;
        entries.push(ManifestEntry {
            path: rel,
            label: Label::Benign,
        });
    }
    for i in 0..n_malicious {
        let program = malicious_program(&mut rng, i, &planted_str, family_prefix, family_suffix);
        let rel = format!("malicious/m{i:04}.spx");
        let path = out_dir.join(&rel);
        fs::write(&path, program.to_spx()).map_err(io_err(&path))?;
        entries.push(ManifestEntry {
            path: rel,
            label: Label::Malicious,
        });
    }

    let db_path = out_dir.join("db.avdb");
    fs::write(&db_path, serialize_db(&db)).map_err(io_err(&db_path))?;

    let manifest = CorpusManifest {
        root: out_dir.to_path_buf(),
        entries,
    };
    manifest.save(&out_dir.join("manifest.tsv"))?;
    Ok(GeneratedCorpus {
        manifest,
        db,
        planted,
    })
}
