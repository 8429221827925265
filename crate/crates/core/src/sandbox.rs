//! Emulated execution of SPX programs.
//!
//! The virtual machine is purely symbolic: executing a program produces a
//! behavior trace and touches nothing else — no file system, no network, no
//! process state. Loops are legal (`JMP`), so every run carries a step
//! budget; exhausting it is a trace outcome, not an error, and feeds the
//! `LOOPS_LONG` heuristic.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::spx::{Instruction, Program};

/// Default instruction budget for one emulation.
pub const DEFAULT_BUDGET: usize = 10_000;

/// The closed set of observable behaviors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BehaviorKind {
    Open,
    Read,
    Write,
    Close,
    Format,
    MoveSys,
    SelfCopy,
    NetSend,
    Decrypt,
}

impl BehaviorKind {
    pub const ALL: [BehaviorKind; 9] = [
        BehaviorKind::Open,
        BehaviorKind::Read,
        BehaviorKind::Write,
        BehaviorKind::Close,
        BehaviorKind::Format,
        BehaviorKind::MoveSys,
        BehaviorKind::SelfCopy,
        BehaviorKind::NetSend,
        BehaviorKind::Decrypt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BehaviorKind::Open => "Open",
            BehaviorKind::Read => "Read",
            BehaviorKind::Write => "Write",
            BehaviorKind::Close => "Close",
            BehaviorKind::Format => "Format",
            BehaviorKind::MoveSys => "MoveSys",
            BehaviorKind::SelfCopy => "SelfCopy",
            BehaviorKind::NetSend => "NetSend",
            BehaviorKind::Decrypt => "Decrypt",
        }
    }
}

impl fmt::Display for BehaviorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BehaviorKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BehaviorKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or(())
    }
}

/// Argument recorded with a behavior event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum EventArg {
    Text(String),
    Count(u32),
}

impl fmt::Display for EventArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventArg::Text(s) => f.write_str(s),
            EventArg::Count(n) => write!(f, "{n}"),
        }
    }
}

/// One observed behavior.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    /// Index of the dispatch that produced this event (0-based).
    pub step: usize,
    pub kind: BehaviorKind,
    pub arg: Option<EventArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    /// Control ran off the end of the program.
    Halted,
    /// The step budget ran out first.
    BudgetExhausted,
}

/// Everything observable about one emulation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutionTrace {
    pub events: Vec<TraceEvent>,
    pub steps_executed: usize,
    pub terminated: Termination,
}

/// Run a program in the emulator for at most `budget` instruction
/// dispatches. Deterministic: identical `(program, budget)` always produces
/// an identical trace.
pub fn execute(p: &Program, budget: usize) -> ExecutionTrace {
    let labels: BTreeMap<&str, usize> = p
        .code
        .iter()
        .enumerate()
        .filter_map(|(i, ins)| match ins {
            Instruction::Label(name) => Some((name.as_str(), i)),
            _ => None,
        })
        .collect();

    let mut registers: BTreeMap<&str, i64> = BTreeMap::new();
    let mut events = Vec::new();
    let mut pc = 0usize;
    let mut steps = 0usize;

    while pc < p.code.len() && steps < budget {
        let step = steps;
        steps += 1;
        let ins = &p.code[pc];
        pc += 1;
        match ins {
            Instruction::Open(arg) => events.push(TraceEvent {
                step,
                kind: BehaviorKind::Open,
                arg: Some(EventArg::Text(arg.clone())),
            }),
            Instruction::Read => events.push(TraceEvent {
                step,
                kind: BehaviorKind::Read,
                arg: None,
            }),
            Instruction::Write => events.push(TraceEvent {
                step,
                kind: BehaviorKind::Write,
                arg: None,
            }),
            Instruction::Close => events.push(TraceEvent {
                step,
                kind: BehaviorKind::Close,
                arg: None,
            }),
            Instruction::Format => events.push(TraceEvent {
                step,
                kind: BehaviorKind::Format,
                arg: None,
            }),
            Instruction::MoveSys(arg) => events.push(TraceEvent {
                step,
                kind: BehaviorKind::MoveSys,
                arg: Some(EventArg::Text(arg.clone())),
            }),
            Instruction::CopySelf => events.push(TraceEvent {
                step,
                kind: BehaviorKind::SelfCopy,
                arg: None,
            }),
            Instruction::NetSend(n) => events.push(TraceEvent {
                step,
                kind: BehaviorKind::NetSend,
                arg: Some(EventArg::Count(*n)),
            }),
            Instruction::Decrypt => events.push(TraceEvent {
                step,
                kind: BehaviorKind::Decrypt,
                arg: None,
            }),
            Instruction::Set(reg, value) => {
                registers.insert(reg.as_str(), *value);
            }
            Instruction::Jmp(target) => {
                // Parse-time validation guarantees the label exists.
                pc = labels[target.as_str()];
            }
            Instruction::Label(_) | Instruction::Nop => {}
        }
    }

    let terminated = if pc >= p.code.len() {
        Termination::Halted
    } else {
        Termination::BudgetExhausted
    };
    ExecutionTrace {
        events,
        steps_executed: steps,
        terminated,
    }
}

/// Behavior kinds observed in the trace but absent from the program's
/// declared abilities.
pub fn diff_abilities(p: &Program, t: &ExecutionTrace) -> std::collections::BTreeSet<BehaviorKind> {
    t.events
        .iter()
        .map(|e| e.kind)
        .filter(|k| !p.abilities.declared.contains(k))
        .collect()
}
