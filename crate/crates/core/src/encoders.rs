//! Two-counter Minsky machines, their encodings into VASS-MDPs, and a small
//! library of fixture systems with known answers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Config, ModelError, Owner, StateId, SystemBuilder, VassMdp};
use crate::query::{Answer, Objective, Problem, Quantifier};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown Minsky state `{0}`")]
    UnknownState(String),
    #[error("Minsky machine needs exactly one initial and one final state")]
    InitFinal,
    #[error("state `{0}` must have either one increment or a decrement and a zero test of the same counter")]
    NotDeterministic(String),
    #[error("the final state may only increment the first counter in place")]
    FinalTransitions,
    #[error("unknown gadget `{0}`")]
    UnknownGadget(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Counter {
    C1,
    C2,
}

impl Counter {
    fn index(self) -> usize {
        match self {
            Counter::C1 => 0,
            Counter::C2 => 1,
        }
    }

    fn unit(self, sign: i64) -> Vec<i64> {
        let mut v = vec![0, 0];
        v[self.index()] = sign;
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InstrKind {
    Inc,
    Dec,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instr {
    pub kind: InstrKind,
    pub from: usize,
    pub counter: Counter,
    pub to: usize,
}

/// A deterministic, deadlock-free two-counter machine whose final state only
/// increments the first counter in place.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinskyMachine {
    states: Vec<String>,
    init: usize,
    fin: usize,
    instrs: Vec<Instr>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinskyOutcome {
    /// The final state was entered after this many steps.
    Reached(usize),
    StepCap,
}

impl MinskyMachine {
    /// Validate a machine. A missing final self-increment is added.
    pub fn new(
        states: Vec<String>,
        init: usize,
        fin: usize,
        mut instrs: Vec<Instr>,
    ) -> Result<Self, EncodeError> {
        if init >= states.len() || fin >= states.len() || init == fin {
            return Err(EncodeError::InitFinal);
        }
        let self_inc = Instr {
            kind: InstrKind::Inc,
            from: fin,
            counter: Counter::C1,
            to: fin,
        };
        let from_fin: Vec<&Instr> = instrs.iter().filter(|i| i.from == fin).collect();
        match from_fin.as_slice() {
            [] => instrs.push(self_inc),
            [i] if **i == self_inc => {}
            _ => return Err(EncodeError::FinalTransitions),
        }
        for (q, name) in states.iter().enumerate() {
            if q == fin {
                continue;
            }
            let mut kinds: Vec<(InstrKind, Counter)> = instrs
                .iter()
                .filter(|i| i.from == q)
                .map(|i| (i.kind, i.counter))
                .collect();
            kinds.sort();
            let ok = match kinds.as_slice() {
                [(InstrKind::Inc, _)] => true,
                [(InstrKind::Dec, c), (InstrKind::Zero, d)] => c == d,
                _ => false,
            };
            if !ok {
                return Err(EncodeError::NotDeterministic(name.clone()));
            }
        }
        Ok(MinskyMachine {
            states,
            init,
            fin,
            instrs,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.instrs
    }

    pub fn init(&self) -> usize {
        self.init
    }

    pub fn fin(&self) -> usize {
        self.fin
    }

    /// Parse the `minsky` text format.
    pub fn parse(text: &str) -> Result<Self, EncodeError> {
        let mut states: Vec<String> = Vec::new();
        let (mut init, mut fin) = (Vec::new(), Vec::new());
        let mut raw: Vec<(usize, InstrKind, String, Counter, String)> = Vec::new();
        let mut header = false;
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| EncodeError::Syntax {
                line: line_no,
                msg: msg.to_string(),
            };
            let words: Vec<&str> = line.split_whitespace().collect();
            if !header {
                if words != ["minsky"] {
                    return Err(err("expected `minsky` header"));
                }
                header = true;
                continue;
            }
            match words.as_slice() {
                ["state", id, rest @ ..] => {
                    if states.iter().any(|s| s == id) {
                        return Err(err(&format!("duplicate state `{id}`")));
                    }
                    for r in rest {
                        match *r {
                            "init" => init.push(states.len()),
                            "final" => fin.push(states.len()),
                            other => return Err(err(&format!("unknown state flag `{other}`"))),
                        }
                    }
                    states.push(id.to_string());
                }
                [kind, q, c, q2] => {
                    let kind = match *kind {
                        "inc" => InstrKind::Inc,
                        "dec" => InstrKind::Dec,
                        "zero" => InstrKind::Zero,
                        other => return Err(err(&format!("unknown instruction `{other}`"))),
                    };
                    let counter = match *c {
                        "c1" => Counter::C1,
                        "c2" => Counter::C2,
                        other => return Err(err(&format!("unknown counter `{other}`"))),
                    };
                    raw.push((line_no, kind, q.to_string(), counter, q2.to_string()));
                }
                _ => return Err(err("malformed line")),
            }
        }
        if !header {
            return Err(EncodeError::Syntax {
                line: 1,
                msg: "expected `minsky` header".into(),
            });
        }
        let idx = |s: &str| {
            states
                .iter()
                .position(|x| x == s)
                .ok_or_else(|| EncodeError::UnknownState(s.to_string()))
        };
        let instrs = raw
            .iter()
            .map(|(_, kind, q, counter, q2)| {
                Ok(Instr {
                    kind: *kind,
                    from: idx(q)?,
                    counter: *counter,
                    to: idx(q2)?,
                })
            })
            .collect::<Result<Vec<_>, EncodeError>>()?;
        match (init.as_slice(), fin.as_slice()) {
            ([i], [f]) => MinskyMachine::new(states, *i, *f, instrs),
            _ => Err(EncodeError::InitFinal),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("minsky\n");
        for (q, s) in self.states.iter().enumerate() {
            let flag = if q == self.init {
                " init"
            } else if q == self.fin {
                " final"
            } else {
                ""
            };
            writeln!(out, "state {s}{flag}").unwrap();
        }
        for i in &self.instrs {
            let kind = match i.kind {
                InstrKind::Inc => "inc",
                InstrKind::Dec => "dec",
                InstrKind::Zero => "zero",
            };
            let c = match i.counter {
                Counter::C1 => "c1",
                Counter::C2 => "c2",
            };
            writeln!(out, "{kind} {} {c} {}", self.states[i.from], self.states[i.to]).unwrap();
        }
        out
    }

    /// Run from `(q_I, 0, 0)` for at most `steps` steps.
    pub fn simulate(&self, steps: usize) -> MinskyOutcome {
        let (mut q, mut c) = (self.init, [0u64; 2]);
        for n in 0..steps {
            if q == self.fin {
                return MinskyOutcome::Reached(n);
            }
            let mine: Vec<&Instr> = self.instrs.iter().filter(|i| i.from == q).collect();
            let i = if let [only] = mine.as_slice() {
                *only
            } else {
                let ctr = mine[0].counter.index();
                let want = if c[ctr] > 0 { InstrKind::Dec } else { InstrKind::Zero };
                *mine.iter().find(|i| i.kind == want).expect("validated")
            };
            match i.kind {
                InstrKind::Inc => c[i.counter.index()] += 1,
                InstrKind::Dec => c[i.counter.index()] -= 1,
                InstrKind::Zero => {}
            }
            q = i.to;
        }
        if q == self.fin {
            MinskyOutcome::Reached(steps)
        } else {
            MinskyOutcome::StepCap
        }
    }
}

/// `simulate_minsky(m, steps)`.
pub fn simulate_minsky(m: &MinskyMachine, steps: usize) -> MinskyOutcome {
    m.simulate(steps)
}

/// An encoded machine: the system, its initial configuration and `q_F`.
#[derive(Clone, Debug)]
pub struct Encoding {
    pub system: VassMdp,
    pub init: Config,
    pub target: StateId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// Direct effects on controller moves; the environment checks zero tests.
    General,
    /// All effects on environment moves; decrements can deadlock.
    PvassDeadlock,
    /// As [`Figure::PvassDeadlock`] with a waiting loop on decrements.
    PvassDeadlockFree,
}

fn encode(m: &MinskyMachine, fig: Figure) -> Result<Encoding, EncodeError> {
    let mut b = SystemBuilder::new(2);
    let ids: Vec<StateId> = m
        .states
        .iter()
        .map(|s| b.state(s, Owner::One))
        .collect::<Result<_, _>>()?;
    let bot = b.state("bot", Owner::One)?;
    b.transition("bot_loop", bot, vec![0, 0], bot, 1)?;
    let zero = vec![0, 0];
    for i in &m.instrs {
        let (q, q2) = (ids[i.from], ids[i.to]);
        let qn = &m.states[i.from];
        match (i.kind, fig) {
            (InstrKind::Inc, Figure::General) => {
                b.transition(&format!("inc_{qn}"), q, i.counter.unit(1), q2, 1)?;
            }
            (InstrKind::Dec, Figure::General) => {
                b.transition(&format!("dec_{qn}"), q, i.counter.unit(-1), q2, 1)?;
            }
            (InstrKind::Inc, _) => {
                let p = b.state(&format!("pi_{qn}"), Owner::Prob)?;
                b.transition(&format!("inc_{qn}"), q, zero.clone(), p, 1)?;
                b.transition(&format!("inc_{qn}_do"), p, i.counter.unit(1), q2, 1)?;
            }
            (InstrKind::Dec, _) => {
                let p = b.state(&format!("pd_{qn}"), Owner::Prob)?;
                b.transition(&format!("dec_{qn}"), q, zero.clone(), p, 1)?;
                b.transition(&format!("dec_{qn}_do"), p, i.counter.unit(-1), q2, 1)?;
                if fig == Figure::PvassDeadlockFree {
                    b.transition(&format!("dec_{qn}_wait"), p, zero.clone(), p, 1)?;
                }
            }
            (InstrKind::Zero, _) => {
                let z = b.state(&format!("pz_{qn}"), Owner::Prob)?;
                b.transition(&format!("zero_{qn}"), q, zero.clone(), z, 1)?;
                b.transition(&format!("zero_{qn}_ok"), z, zero.clone(), q2, 1)?;
                b.transition(&format!("zero_{qn}_cheat"), z, i.counter.unit(-1), bot, 1)?;
            }
        }
    }
    Ok(Encoding {
        system: b.build(),
        init: Config::new(ids[m.init], vec![0, 0]),
        target: ids[m.fin],
    })
}

/// Effects on both players; deadlock-free for valid machines.
pub fn encode_general(m: &MinskyMachine) -> Result<Encoding, EncodeError> {
    encode(m, Figure::General)
}

/// P-VASS-MDP in which a decrement of an empty counter deadlocks.
pub fn encode_pvass_deadlock(m: &MinskyMachine) -> Result<Encoding, EncodeError> {
    encode(m, Figure::PvassDeadlock)
}

/// Deadlock-free P-VASS-MDP: the decrement node may also wait in place.
pub fn encode_pvass_deadlockfree(m: &MinskyMachine) -> Result<Encoding, EncodeError> {
    encode(m, Figure::PvassDeadlockFree)
}

pub fn encode_with(m: &MinskyMachine, fig: Figure) -> Result<Encoding, EncodeError> {
    encode(m, fig)
}

/// A fixture system with its analytically known answers.
#[derive(Clone, Debug)]
pub struct Gadget {
    pub name: &'static str,
    pub system: VassMdp,
    pub init: Config,
    pub targets: Vec<StateId>,
    pub expected: BTreeMap<Problem, Answer>,
}

pub const GADGETS: [&str; 3] = ["FIX-DEC", "FIX-COIN", "FIX-PUMP"];

fn table(rows: [bool; 6]) -> BTreeMap<Problem, Answer> {
    Problem::ALL
        .into_iter()
        .zip(rows)
        .map(|(p, b)| (p, Answer::from_bool(b)))
        .collect()
}

/// Fixture by name.
///
/// * `FIX-DEC`: a controller state that must decrement to reach the target;
///   stuck from counter 0.
/// * `FIX-COIN`: a fair coin retried until it lands on the target.
/// * `FIX-PUMP`: the controller may pump a counter and then bet it on a
///   coin game that costs one unit per lost round; any fixed pump height
///   fails with positive probability.
pub fn gen_gadget(name: &str) -> Result<Gadget, EncodeError> {
    match name {
        "FIX-DEC" => {
            let mut b = SystemBuilder::new(1);
            let q0 = b.state("q0", Owner::One)?;
            let f = b.state("f", Owner::One)?;
            b.transition("dec", q0, vec![-1], f, 1)?;
            b.transition("stay", f, vec![0], f, 1)?;
            Ok(Gadget {
                name: "FIX-DEC",
                system: b.build(),
                init: Config::new(q0, vec![0]),
                targets: vec![f],
                expected: table([false; 6]),
            })
        }
        "FIX-COIN" => {
            let mut b = SystemBuilder::new(1);
            let c = b.state("c", Owner::Prob)?;
            let f = b.state("f", Owner::One)?;
            b.transition("win", c, vec![0], f, 1)?;
            b.transition("again", c, vec![0], c, 1)?;
            b.transition("stay", f, vec![0], f, 1)?;
            Ok(Gadget {
                name: "FIX-COIN",
                system: b.build(),
                init: Config::new(c, vec![0]),
                targets: vec![f],
                expected: table([false, true, true, false, true, true]),
            })
        }
        "FIX-PUMP" => {
            let mut b = SystemBuilder::new(1);
            let s = b.state("s", Owner::One)?;
            let p = b.state("p", Owner::Prob)?;
            let t = b.state("t", Owner::One)?;
            let f = b.state("f", Owner::Prob)?;
            b.transition("pump", s, vec![1], s, 1)?;
            b.transition("go", s, vec![0], p, 1)?;
            b.transition("win", p, vec![0], f, 1)?;
            b.transition("lose", p, vec![0], t, 1)?;
            b.transition("pay", t, vec![-1], p, 1)?;
            Ok(Gadget {
                name: "FIX-PUMP",
                system: b.build(),
                init: Config::new(s, vec![0]),
                targets: vec![f],
                expected: table([false, false, true, false, false, false]),
            })
        }
        other => Err(EncodeError::UnknownGadget(other.to_string())),
    }
}

/// Quantifier-level view of a gadget table.
pub fn expected(g: &Gadget, quantifier: Quantifier, objective: Objective) -> &Answer {
    &g.expected[&Problem::new(quantifier, objective)]
}
