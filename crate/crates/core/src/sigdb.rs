//! Signature database: parsing, validation and serialization of `.avdb`
//! files holding exact signatures, wildcard generic signatures and
//! integrity baselines.
//!
//! The format is line-oriented text so databases diff cleanly and can be
//! hand-edited in tests:
//!
//! ```text
//! AVDB 1
//! # comments and blank lines are ignored
//! EXACT <name> <hexbytes>
//! GENERIC <name> <tok> <tok> ...   tok := HH | ?? | * | *{m-n}
//! HASH <path_id> <sha256-hex>
//! ```
//!
//! A parsed [`SignatureDb`] is immutable in practice: nothing in the engine
//! mutates it after load, so it can be shared read-only across scanners.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Bare `*` is shorthand for a gap of 0 to this many bytes.
pub const DEFAULT_GAP_MAX: u32 = 16;
/// Hard cap on any gap's upper bound.
pub const GAP_MAX_LIMIT: u32 = 64;
/// Exact signatures shorter than this are rejected at parse time.
pub const MIN_EXACT_LEN: usize = 4;
/// A generic signature needs at least this many concrete byte tokens, which
/// rules out patterns that would match nearly everything.
pub const MIN_CONCRETE_BYTES: usize = 2;

/// A fixed byte sequence identifying one specific threat.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactSignature {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// One element of a wildcard pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PatternToken {
    /// Matches exactly this byte.
    Byte(u8),
    /// Matches any single byte (`??`).
    AnyByte,
    /// Matches any run of `min..=max` bytes (`*{m-n}`).
    Gap { min: u32, max: u32 },
}

/// A wildcard pattern matching a family of variants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenericSignature {
    pub name: String,
    pub tokens: Vec<PatternToken>,
}

impl GenericSignature {
    /// Smallest number of bytes a match can span.
    pub fn min_span(&self) -> usize {
        self.tokens
            .iter()
            .map(|t| match t {
                PatternToken::Byte(_) | PatternToken::AnyByte => 1,
                PatternToken::Gap { min, .. } => *min as usize,
            })
            .sum()
    }

    /// Largest number of bytes a match can span.
    pub fn max_span(&self) -> usize {
        self.tokens
            .iter()
            .map(|t| match t {
                PatternToken::Byte(_) | PatternToken::AnyByte => 1,
                PatternToken::Gap { max, .. } => *max as usize,
            })
            .sum()
    }
}

/// Known-good digest for one file path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntegrityRecord {
    pub path_id: String,
    /// 64 lowercase hex characters.
    pub digest: String,
}

/// The parsed database.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SignatureDb {
    pub exact: Vec<ExactSignature>,
    pub generic: Vec<GenericSignature>,
    pub baselines: Vec<IntegrityRecord>,
    pub version: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DbError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("duplicate name `{name}`")]
    DuplicateName { name: String },
    #[error("invalid pattern `{name}`: {reason}")]
    InvalidPattern { name: String, reason: String },
}

/// Signature names: `[A-Za-z0-9_.-]+`.
pub fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || b == b'-')
}

/// Path ids representable in a `HASH` record: normalized relative paths
/// without whitespace or `#` (both would break the line format).
pub fn valid_path_id(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with('/')
        && !s.contains('\\')
        && !s.contains('#')
        && !s.chars().any(char::is_whitespace)
        && s.split('/').all(|c| !c.is_empty() && c != "." && c != "..")
}

fn parse_hex_bytes(s: &str) -> Option<Vec<u8>> {
    hex::decode(s).ok()
}

fn parse_token(tok: &str) -> Option<PatternToken> {
    match tok {
        "??" => Some(PatternToken::AnyByte),
        "*" => Some(PatternToken::Gap {
            min: 0,
            max: DEFAULT_GAP_MAX,
        }),
        _ if tok.len() == 2 && tok.bytes().all(|b| b.is_ascii_hexdigit()) => {
            Some(PatternToken::Byte(u8::from_str_radix(tok, 16).ok()?))
        }
        _ => {
            let inner = tok.strip_prefix("*{")?.strip_suffix('}')?;
            let (min, max) = inner.split_once('-')?;
            Some(PatternToken::Gap {
                min: min.parse().ok()?,
                max: max.parse().ok()?,
            })
        }
    }
}

fn validate_tokens(name: &str, tokens: &[PatternToken]) -> Result<(), DbError> {
    let invalid = |reason: String| DbError::InvalidPattern {
        name: name.to_string(),
        reason,
    };
    if matches!(tokens.first(), None | Some(PatternToken::Gap { .. })) {
        return Err(invalid("pattern must not begin with a gap".into()));
    }
    if matches!(tokens.last(), Some(PatternToken::Gap { .. })) {
        return Err(invalid("pattern must not end with a gap".into()));
    }
    for pair in tokens.windows(2) {
        if matches!(pair, [PatternToken::Gap { .. }, PatternToken::Gap { .. }]) {
            return Err(invalid("adjacent gaps are not allowed".into()));
        }
    }
    for t in tokens {
        if let PatternToken::Gap { min, max } = t {
            if min > max {
                return Err(invalid(format!("gap min {min} exceeds max {max}")));
            }
            if *max > GAP_MAX_LIMIT {
                return Err(invalid(format!(
                    "gap max {max} exceeds limit {GAP_MAX_LIMIT}"
                )));
            }
        }
    }
    let concrete = tokens
        .iter()
        .filter(|t| matches!(t, PatternToken::Byte(_)))
        .count();
    if concrete < MIN_CONCRETE_BYTES {
        return Err(invalid(format!(
            "needs at least {MIN_CONCRETE_BYTES} concrete bytes"
        )));
    }
    Ok(())
}

/// Parse a `.avdb` database, rejecting any record that violates an
/// invariant. Nothing is silently dropped: the first offending line aborts
/// the parse with its line number.
pub fn parse_db(text: &str) -> Result<SignatureDb, DbError> {
    let syntax = |line: usize, reason: &str| DbError::Syntax {
        line,
        reason: reason.to_string(),
    };

    let mut lines = text.lines().enumerate();
    let version = loop {
        let Some((idx, raw)) = lines.next() else {
            return Err(syntax(1, "missing `AVDB <version>` header"));
        };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let ["AVDB", ver] = fields[..] else {
            return Err(syntax(
                idx + 1,
                "first record must be the `AVDB <version>` header",
            ));
        };
        let version: u64 = ver
            .parse()
            .map_err(|_| syntax(idx + 1, "invalid version number"))?;
        if version == 0 {
            return Err(syntax(idx + 1, "version must be at least 1"));
        }
        break version;
    };

    let mut db = SignatureDb {
        version,
        ..SignatureDb::default()
    };
    let mut sig_names = BTreeSet::new();
    let mut path_ids = BTreeSet::new();

    for (idx, raw) in lines {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        let kind = fields.next().unwrap();
        match kind {
            "EXACT" => {
                let (Some(name), Some(hexstr), None) =
                    (fields.next(), fields.next(), fields.next())
                else {
                    return Err(syntax(line, "expected `EXACT <name> <hexbytes>`"));
                };
                if !valid_name(name) {
                    return Err(syntax(line, "invalid signature name"));
                }
                if !sig_names.insert(name.to_string()) {
                    return Err(DbError::DuplicateName {
                        name: name.to_string(),
                    });
                }
                let bytes = parse_hex_bytes(hexstr)
                    .ok_or_else(|| syntax(line, "signature bytes must be even-length hex"))?;
                if bytes.len() < MIN_EXACT_LEN {
                    return Err(DbError::InvalidPattern {
                        name: name.to_string(),
                        reason: format!("exact signature needs at least {MIN_EXACT_LEN} bytes"),
                    });
                }
                db.exact.push(ExactSignature {
                    name: name.to_string(),
                    bytes,
                });
            }
            "GENERIC" => {
                let Some(name) = fields.next() else {
                    return Err(syntax(line, "expected `GENERIC <name> <tok>...`"));
                };
                if !valid_name(name) {
                    return Err(syntax(line, "invalid signature name"));
                }
                if !sig_names.insert(name.to_string()) {
                    return Err(DbError::DuplicateName {
                        name: name.to_string(),
                    });
                }
                let mut tokens = Vec::new();
                for tok in fields {
                    let t = parse_token(tok)
                        .ok_or_else(|| syntax(line, &format!("invalid token `{tok}`")))?;
                    tokens.push(t);
                }
                validate_tokens(name, &tokens)?;
                db.generic.push(GenericSignature {
                    name: name.to_string(),
                    tokens,
                });
            }
            "HASH" => {
                let (Some(path_id), Some(digest), None) =
                    (fields.next(), fields.next(), fields.next())
                else {
                    return Err(syntax(line, "expected `HASH <path_id> <sha256-hex>`"));
                };
                if !valid_path_id(path_id) {
                    return Err(syntax(line, "invalid path id"));
                }
                if !path_ids.insert(path_id.to_string()) {
                    return Err(DbError::DuplicateName {
                        name: path_id.to_string(),
                    });
                }
                if digest.len() != 64
                    || !digest
                        .bytes()
                        .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
                {
                    return Err(syntax(line, "digest must be 64 lowercase hex characters"));
                }
                db.baselines.push(IntegrityRecord {
                    path_id: path_id.to_string(),
                    digest: digest.to_string(),
                });
            }
            "AVDB" => return Err(syntax(line, "duplicate header")),
            other => return Err(syntax(line, &format!("unknown record kind `{other}`"))),
        }
    }
    Ok(db)
}

impl fmt::Display for PatternToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternToken::Byte(b) => write!(f, "{b:02X}"),
            PatternToken::AnyByte => f.write_str("??"),
            PatternToken::Gap { min, max } => write!(f, "*{{{min}-{max}}}"),
        }
    }
}

/// Serialize a database. Records are emitted in deterministic order (kind,
/// then name), so `parse_db(serialize_db(db))` is structurally equal to a
/// normalized `db` and serializations of equal databases are byte-identical.
pub fn serialize_db(db: &SignatureDb) -> String {
    let mut out = format!("AVDB {}\n", db.version);

    let mut exact: Vec<&ExactSignature> = db.exact.iter().collect();
    exact.sort_by(|a, b| a.name.cmp(&b.name));
    for sig in exact {
        out.push_str(&format!(
            "EXACT {} {}\n",
            sig.name,
            hex::encode_upper(&sig.bytes)
        ));
    }

    let mut generic: Vec<&GenericSignature> = db.generic.iter().collect();
    generic.sort_by(|a, b| a.name.cmp(&b.name));
    for sig in generic {
        out.push_str(&format!("GENERIC {}", sig.name));
        for tok in &sig.tokens {
            out.push_str(&format!(" {tok}"));
        }
        out.push('\n');
    }

    let mut baselines: Vec<&IntegrityRecord> = db.baselines.iter().collect();
    baselines.sort_by(|a, b| a.path_id.cmp(&b.path_id));
    for rec in baselines {
        out.push_str(&format!("HASH {} {}\n", rec.path_id, rec.digest));
    }
    out
}

/// Sort records in place into the serialization order.
pub fn normalize(db: &mut SignatureDb) {
    db.exact.sort_by(|a, b| a.name.cmp(&b.name));
    db.generic.sort_by(|a, b| a.name.cmp(&b.name));
    db.baselines.sort_by(|a, b| a.path_id.cmp(&b.path_id));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_exact_record() {
        let db = parse_db("AVDB 1\nEXACT e1 DEADBEEF\n").unwrap();
        assert_eq!(db.version, 1);
        assert_eq!(db.exact.len(), 1);
        assert_eq!(db.exact[0].name, "e1");
        assert_eq!(db.exact[0].bytes, vec![0xDE, 0xAD, 0xBE, 0xEF]);
    }

    #[test]
    fn parse_generic_tokens() {
        let db = parse_db("AVDB 1\nGENERIC g1 4D 5A ?? *{0-8} 50 45\n").unwrap();
        assert_eq!(
            db.generic[0].tokens,
            vec![
                PatternToken::Byte(0x4D),
                PatternToken::Byte(0x5A),
                PatternToken::AnyByte,
                PatternToken::Gap { min: 0, max: 8 },
                PatternToken::Byte(0x50),
                PatternToken::Byte(0x45),
            ]
        );
    }

    #[test]
    fn bare_star_is_bounded_gap() {
        let db = parse_db("AVDB 1\nGENERIC g 41 * 42\n").unwrap();
        assert_eq!(
            db.generic[0].tokens[1],
            PatternToken::Gap {
                min: 0,
                max: DEFAULT_GAP_MAX
            }
        );
    }

    #[test]
    fn leading_gap_rejected() {
        let err = parse_db("AVDB 1\nGENERIC bad *{0-4} 41 42\n").unwrap_err();
        assert!(
            matches!(&err, DbError::InvalidPattern { name, .. } if name == "bad"),
            "got {err:?}"
        );
    }

    #[test]
    fn trailing_gap_rejected() {
        let err = parse_db("AVDB 1\nGENERIC bad 41 42 *{0-4}\n").unwrap_err();
        assert!(matches!(err, DbError::InvalidPattern { .. }));
    }

    #[test]
    fn adjacent_gaps_rejected() {
        let err = parse_db("AVDB 1\nGENERIC bad 41 *{0-2} *{0-2} 42\n").unwrap_err();
        assert!(matches!(err, DbError::InvalidPattern { .. }));
    }

    #[test]
    fn vacuous_pattern_rejected() {
        let err = parse_db("AVDB 1\nGENERIC bad 41 ?? ??\n").unwrap_err();
        assert!(matches!(err, DbError::InvalidPattern { .. }));
    }

    #[test]
    fn oversized_gap_rejected() {
        let err = parse_db("AVDB 1\nGENERIC bad 41 *{0-65} 42\n").unwrap_err();
        assert!(matches!(err, DbError::InvalidPattern { .. }));
    }

    #[test]
    fn short_exact_rejected() {
        let err = parse_db("AVDB 1\nEXACT e1 DEAD\n").unwrap_err();
        assert!(matches!(err, DbError::InvalidPattern { .. }));
    }

    #[test]
    fn duplicate_names_rejected_across_kinds() {
        let err = parse_db("AVDB 1\nEXACT s1 DEADBEEF\nGENERIC s1 41 42\n").unwrap_err();
        assert_eq!(err, DbError::DuplicateName { name: "s1".into() });
    }

    #[test]
    fn duplicate_path_ids_rejected() {
        let d = "a".repeat(64);
        let text = format!("AVDB 1\nHASH p/q {d}\nHASH p/q {d}\n");
        let err = parse_db(&text).unwrap_err();
        assert_eq!(err, DbError::DuplicateName { name: "p/q".into() });
    }

    #[test]
    fn uppercase_digest_rejected() {
        let text = format!("AVDB 1\nHASH p {}\n", "A".repeat(64));
        let err = parse_db(&text).unwrap_err();
        assert!(matches!(err, DbError::Syntax { line: 2, .. }));
    }

    #[test]
    fn missing_header_rejected() {
        let err = parse_db("EXACT e1 DEADBEEF\n").unwrap_err();
        assert!(matches!(err, DbError::Syntax { line: 1, .. }));
    }

    #[test]
    fn zero_version_rejected() {
        let err = parse_db("AVDB 0\n").unwrap_err();
        assert!(matches!(err, DbError::Syntax { line: 1, .. }));
    }

    #[test]
    fn error_cites_offending_line() {
        let err = parse_db("AVDB 1\n# fine\nEXACT e1 XYZ\n").unwrap_err();
        assert!(matches!(err, DbError::Syntax { line: 3, .. }));
    }

    #[test]
    fn hex_case_insensitive_on_parse() {
        let db = parse_db("AVDB 1\nEXACT e1 deadBEEF\n").unwrap();
        assert_eq!(db.exact[0].bytes, vec![0xDE, 0xAD, 0xBE, 0xEF]);
    }

    #[test]
    fn empty_db_serializes_to_header_only() {
        let db = SignatureDb {
            version: 1,
            ..SignatureDb::default()
        };
        assert_eq!(serialize_db(&db), "AVDB 1\n");
        assert_eq!(parse_db(&serialize_db(&db)).unwrap(), db);
    }

    #[test]
    fn serialization_is_kind_then_name_sorted() {
        let d = "1".repeat(64);
        let text = format!("AVDB 3\nHASH zz/b {d}\nEXACT zeta CAFEBABE\nEXACT alpha DEADBEEF\n");
        let db = parse_db(&text).unwrap();
        let out = serialize_db(&db);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "AVDB 3");
        assert_eq!(lines[1], "EXACT alpha DEADBEEF");
        assert_eq!(lines[2], "EXACT zeta CAFEBABE");
        assert_eq!(lines[3], format!("HASH zz/b {d}"));
    }

    #[test]
    fn round_trip_preserves_structure() {
        let text = "AVDB 7\nEXACT e1 DEADBEEF\nGENERIC g1 4D 5A ?? *{0-8} 50 45\nGENERIC g2 41 * 42\nHASH bin/ls 0000000000000000000000000000000000000000000000000000000000000000\n";
        let mut db = parse_db(text).unwrap();
        normalize(&mut db);
        let again = parse_db(&serialize_db(&db)).unwrap();
        assert_eq!(again, db);
    }
}
