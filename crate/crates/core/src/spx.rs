//! SPX: the synthetic program format scanned by this engine.
//!
//! An SPX file is line-oriented assembly. `;` starts a full-line comment.
//! Directives: `.name <id>` (required once), `.abilities <Kind>...`,
//! `.str "<literal>"`. Everything else is one instruction per line:
//!
//! ```text
//! .name updater
//! .abilities Open Read NetSend
//! .str "checking for updates"
//! OPEN "etc/feed"
//! READ
//! NETSEND 1
//! ```
//!
//! Static heuristic features are extracted from the parsed form without
//! executing anything; execution belongs to the sandbox.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::heuristics::{FeatureId, FeatureSet};
use crate::sandbox::BehaviorKind;

/// Programs longer than this are rejected at parse time.
pub const MAX_INSTRUCTIONS: usize = 65_536;

/// Self-declared capability list.
///
/// `present` records whether the source carried an `.abilities` directive
/// at all; an absent manifest is different from an empty one. Programs
/// without a manifest made no declaration, so the static declared-ability
/// features do not apply to them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbilityManifest {
    pub declared: BTreeSet<BehaviorKind>,
    pub present: bool,
}

/// One SPX instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    Open(String),
    Read,
    Write,
    Close,
    Format,
    MoveSys(String),
    CopySelf,
    NetSend(u32),
    Decrypt,
    Set(String, i64),
    Jmp(String),
    Label(String),
    Nop,
}

impl Instruction {
    /// The behavior this instruction performs when executed, if any.
    pub fn behavior(&self) -> Option<BehaviorKind> {
        match self {
            Instruction::Open(_) => Some(BehaviorKind::Open),
            Instruction::Read => Some(BehaviorKind::Read),
            Instruction::Write => Some(BehaviorKind::Write),
            Instruction::Close => Some(BehaviorKind::Close),
            Instruction::Format => Some(BehaviorKind::Format),
            Instruction::MoveSys(_) => Some(BehaviorKind::MoveSys),
            Instruction::CopySelf => Some(BehaviorKind::SelfCopy),
            Instruction::NetSend(_) => Some(BehaviorKind::NetSend),
            Instruction::Decrypt => Some(BehaviorKind::Decrypt),
            Instruction::Set(..)
            | Instruction::Jmp(_)
            | Instruction::Label(_)
            | Instruction::Nop => None,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Open(arg) => write!(f, "OPEN \"{arg}\""),
            Instruction::Read => f.write_str("READ"),
            Instruction::Write => f.write_str("WRITE"),
            Instruction::Close => f.write_str("CLOSE"),
            Instruction::Format => f.write_str("FORMAT"),
            Instruction::MoveSys(arg) => write!(f, "MOVESYS \"{arg}\""),
            Instruction::CopySelf => f.write_str("COPYSELF"),
            Instruction::NetSend(n) => write!(f, "NETSEND {n}"),
            Instruction::Decrypt => f.write_str("DECRYPT"),
            Instruction::Set(reg, v) => write!(f, "SET {reg} {v}"),
            Instruction::Jmp(l) => write!(f, "JMP {l}"),
            Instruction::Label(l) => write!(f, "LABEL {l}"),
            Instruction::Nop => f.write_str("NOP"),
        }
    }
}

/// A parsed SPX program.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    pub abilities: AbilityManifest,
    pub strings: Vec<String>,
    pub code: Vec<Instruction>,
}

impl Program {
    /// Render back to SPX source. `parse_spx(p.to_spx())` reproduces `p`.
    pub fn to_spx(&self) -> String {
        let mut out = format!(".name {}\n", self.name);
        if self.abilities.present {
            out.push_str(".abilities");
            for kind in &self.abilities.declared {
                out.push_str(&format!(" {kind}"));
            }
            out.push('\n');
        }
        for s in &self.strings {
            out.push_str(&format!(".str \"{s}\"\n"));
        }
        for ins in &self.code {
            out.push_str(&format!("{ins}\n"));
        }
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpxError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: unknown opcode `{mnemonic}`")]
    UnknownOpcode { line: usize, mnemonic: String },
    #[error("jump to undefined label `{name}`")]
    UndefinedLabel { name: String },
    #[error("program exceeds {MAX_INSTRUCTIONS} instructions")]
    TooLong,
}

fn valid_ident(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || b == b'-')
}

fn parse_quoted(line: usize, s: &str) -> Result<String, SpxError> {
    let syntax = |reason: &str| SpxError::Syntax {
        line,
        reason: reason.to_string(),
    };
    let inner = s
        .strip_prefix('"')
        .and_then(|rest| rest.strip_suffix('"'))
        .ok_or_else(|| syntax("expected a double-quoted string"))?;
    if inner.contains('"') {
        return Err(syntax("string literals cannot contain `\"`"));
    }
    Ok(inner.to_string())
}

/// Parse SPX source into a [`Program`].
pub fn parse_spx(text: &str) -> Result<Program, SpxError> {
    let mut name: Option<String> = None;
    let mut abilities = AbilityManifest::default();
    let mut strings = Vec::new();
    let mut code: Vec<Instruction> = Vec::new();
    let mut labels = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let syntax = |reason: String| SpxError::Syntax { line, reason };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with(';') {
            continue;
        }

        if let Some(rest) = trimmed.strip_prefix(".name") {
            let id = rest.trim();
            if !valid_ident(id) {
                return Err(syntax("invalid program name".into()));
            }
            if name.replace(id.to_string()).is_some() {
                return Err(syntax("duplicate .name directive".into()));
            }
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix(".abilities") {
            abilities.present = true;
            for word in rest.split_whitespace() {
                let kind: BehaviorKind = word
                    .parse()
                    .map_err(|_| syntax(format!("unknown ability `{word}`")))?;
                abilities.declared.insert(kind);
            }
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix(".str") {
            strings.push(parse_quoted(line, rest.trim())?);
            continue;
        }
        if trimmed.starts_with('.') {
            return Err(syntax(format!("unknown directive `{trimmed}`")));
        }

        let (mnemonic, rest) = match trimmed.split_once(char::is_whitespace) {
            Some((m, r)) => (m, r.trim()),
            None => (trimmed, ""),
        };
        let no_arg = |ins: Instruction| {
            if rest.is_empty() {
                Ok(ins)
            } else {
                Err(syntax(format!("`{mnemonic}` takes no argument")))
            }
        };
        let ident_arg = || {
            if valid_ident(rest) {
                Ok(rest.to_string())
            } else {
                Err(syntax(format!("`{mnemonic}` needs an identifier argument")))
            }
        };
        let ins = match mnemonic {
            "OPEN" => Instruction::Open(parse_quoted(line, rest)?),
            "READ" => no_arg(Instruction::Read)?,
            "WRITE" => no_arg(Instruction::Write)?,
            "CLOSE" => no_arg(Instruction::Close)?,
            "FORMAT" => no_arg(Instruction::Format)?,
            "MOVESYS" => Instruction::MoveSys(parse_quoted(line, rest)?),
            "COPYSELF" => no_arg(Instruction::CopySelf)?,
            "NETSEND" => {
                let n: u32 = rest
                    .parse()
                    .map_err(|_| syntax("`NETSEND` needs a count".into()))?;
                Instruction::NetSend(n)
            }
            "DECRYPT" => no_arg(Instruction::Decrypt)?,
            "SET" => {
                let (reg, value) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| syntax("expected `SET <reg> <value>`".into()))?;
                if !valid_ident(reg) {
                    return Err(syntax("invalid register name".into()));
                }
                let value: i64 = value
                    .trim()
                    .parse()
                    .map_err(|_| syntax("invalid SET value".into()))?;
                Instruction::Set(reg.to_string(), value)
            }
            "JMP" => Instruction::Jmp(ident_arg()?),
            "LABEL" => {
                let l = ident_arg()?;
                if !labels.insert(l.clone()) {
                    return Err(syntax(format!("duplicate label `{l}`")));
                }
                Instruction::Label(l)
            }
            "NOP" => no_arg(Instruction::Nop)?,
            other => {
                return Err(SpxError::UnknownOpcode {
                    line,
                    mnemonic: other.to_string(),
                })
            }
        };
        code.push(ins);
        if code.len() > MAX_INSTRUCTIONS {
            return Err(SpxError::TooLong);
        }
    }

    for ins in &code {
        if let Instruction::Jmp(target) = ins {
            if !labels.contains(target) {
                return Err(SpxError::UndefinedLabel {
                    name: target.clone(),
                });
            }
        }
    }

    let name = name.ok_or(SpxError::Syntax {
        line: text.lines().count() + 1,
        reason: "missing .name directive".into(),
    })?;
    Ok(Program {
        name,
        abilities,
        strings,
        code,
    })
}

/// Extract the static feature set of a program. Pure: depends only on the
/// parsed form.
///
/// `UNDECLARED_OPCODE` and `DECLARED_ALL` apply only to programs that carry
/// an ability manifest — a program that declares nothing has made no claim
/// to check against.
pub fn extract_static_features(p: &Program) -> FeatureSet {
    let mut features = FeatureSet::new();

    // OPEN before READ before WRITE, in code order.
    let mut seen_open = false;
    let mut seen_open_read = false;
    for ins in &p.code {
        match ins {
            Instruction::Open(_) => seen_open = true,
            Instruction::Read if seen_open => seen_open_read = true,
            Instruction::Write if seen_open_read => {
                features.insert(FeatureId::OpenReadWriteSeq);
            }
            _ => {}
        }
    }

    if p.strings.iter().any(|s| s.contains("VIRUS")) {
        features.insert(FeatureId::StrVirus);
    }

    let mut undeclared = false;
    for ins in &p.code {
        let Some(kind) = ins.behavior() else { continue };
        match kind {
            BehaviorKind::SelfCopy => {
                features.insert(FeatureId::HasCopyself);
            }
            BehaviorKind::Format => {
                features.insert(FeatureId::HasFormat);
            }
            BehaviorKind::MoveSys => {
                features.insert(FeatureId::HasMovesys);
            }
            BehaviorKind::Decrypt => {
                features.insert(FeatureId::HasDecrypt);
            }
            _ => {}
        }
        if p.abilities.present && !p.abilities.declared.contains(&kind) {
            undeclared = true;
        }
    }
    if undeclared {
        features.insert(FeatureId::UndeclaredOpcode);
    }
    if p.abilities.present && !undeclared {
        features.insert(FeatureId::DeclaredAll);
    }
    features
}
