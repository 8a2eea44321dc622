//! Line-oriented text formats for systems and queries.
//!
//! ```text
//! vassmdp d=1
//! state s owner=1
//! state p owner=P
//! trans go s -> p [ 0 ] w=1
//! init s [ 0 ]
//! target p
//! ```
//!
//! `#` starts a comment. States may be referenced before their `state`
//! line. [`serialize_system`] writes the canonical form that
//! [`parse_system`] reads back unchanged.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Config, Owner, StateId, SystemBuilder, VassMdp};
use crate::query::{Problem, QuerySpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Tok<'a> {
    text: &'a str,
    col: usize,
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError {
        line,
        col,
        msg: msg.into(),
    }
}

/// Tokens of one line with 1-based character columns; brackets stand alone.
fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let line = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let col_of = |byte: usize| line[..byte].chars().count() + 1;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() || ch == '[' || ch == ']' {
            if let Some(s) = start.take() {
                out.push(Tok {
                    text: &line[s..i],
                    col: col_of(s),
                });
            }
            if ch != ' ' && !ch.is_whitespace() {
                out.push(Tok {
                    text: &line[i..i + 1],
                    col: col_of(i),
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok {
            text: &line[s..],
            col: col_of(s),
        });
    }
    out
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Line<'a> {
    no: usize,
    toks: Vec<Tok<'a>>,
    pos: usize,
    len: usize,
}

impl<'a> Line<'a> {
    fn end_col(&self) -> usize {
        self.len + 1
    }

    fn next(&mut self, what: &str) -> Result<Tok<'a>, ParseError> {
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| err(self.no, self.end_col(), format!("expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn ident(&mut self, what: &str) -> Result<Tok<'a>, ParseError> {
        let t = self.next(what)?;
        if !is_ident(t.text) {
            return Err(err(self.no, t.col, format!("expected {what}, found `{}`", t.text)));
        }
        Ok(t)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let t = self.next(&format!("`{kw}`"))?;
        if t.text != kw {
            return Err(err(self.no, t.col, format!("expected `{kw}`, found `{}`", t.text)));
        }
        Ok(())
    }

    fn assignment(&mut self, key: &str) -> Result<(Tok<'a>, &'a str), ParseError> {
        let t = self.next(&format!("`{key}=`"))?;
        match t.text.strip_prefix(key).and_then(|r| r.strip_prefix('=')) {
            Some(v) => Ok((t, v)),
            None => Err(err(self.no, t.col, format!("expected `{key}=`, found `{}`", t.text))),
        }
    }

    /// `[ x ... x ]` parsed by `conv`.
    fn vector<T>(
        &mut self,
        conv: impl Fn(&str) -> Option<T>,
        what: &str,
    ) -> Result<(usize, Vec<T>), ParseError> {
        let open = self.next("`[`")?;
        if open.text != "[" {
            return Err(err(self.no, open.col, format!("expected `[`, found `{}`", open.text)));
        }
        let mut out = Vec::new();
        loop {
            let t = self.next("`]`")?;
            if t.text == "]" {
                return Ok((open.col, out));
            }
            match conv(t.text) {
                Some(v) => out.push(v),
                None => {
                    return Err(err(self.no, t.col, format!("expected {what}, found `{}`", t.text)))
                }
            }
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.toks.get(self.pos) {
            Some(t) => Err(err(self.no, t.col, format!("unexpected `{}`", t.text))),
            None => Ok(()),
        }
    }
}

fn lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let toks = tokenize(l);
        (!toks.is_empty()).then(|| Line {
            no: i + 1,
            toks,
            pos: 0,
            len: l.chars().count(),
        })
    })
}

/// A parsed system file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemFile {
    pub system: VassMdp,
    pub init: Option<Config>,
    pub targets: Vec<StateId>,
}

struct PendingTrans<'a> {
    line: usize,
    name: Tok<'a>,
    src: Tok<'a>,
    dst: Tok<'a>,
    effect: (usize, Vec<i64>),
    weight: u64,
}

fn resolve(b: &SystemBuilder, line: usize, t: &Tok<'_>) -> Result<StateId, ParseError> {
    b.lookup(t.text)
        .ok_or_else(|| err(line, t.col, format!("unknown state `{}`", t.text)))
}

fn check_dim(line: usize, col: usize, dim: usize, found: usize) -> Result<(), ParseError> {
    if found != dim {
        return Err(err(
            line,
            col,
            format!("dimension mismatch: expected {dim} entries, found {found}"),
        ));
    }
    Ok(())
}

pub fn parse_system(text: &str) -> Result<SystemFile, ParseError> {
    let mut it = lines(text);
    let mut header = it.next().ok_or_else(|| err(1, 1, "expected `vassmdp d=<n>`"))?;
    header.keyword("vassmdp")?;
    let (dt, dv) = header.assignment("d")?;
    let dim: usize = dv
        .parse()
        .map_err(|_| err(header.no, dt.col, format!("bad dimension `{dv}`")))?;
    header.finish()?;

    let mut b = SystemBuilder::new(dim);
    let mut trans = Vec::new();
    let mut inits = Vec::new();
    let mut target_toks = Vec::new();
    for mut l in it {
        let kw = l.next("a declaration")?;
        match kw.text {
            "state" => {
                let name = l.ident("a state name")?;
                let (ot, ov) = l.assignment("owner")?;
                let owner = match ov {
                    "1" => Owner::One,
                    "P" => Owner::Prob,
                    _ => return Err(err(l.no, ot.col, format!("owner must be 1 or P, found `{ov}`"))),
                };
                l.finish()?;
                b.state(name.text, owner)
                    .map_err(|e| err(l.no, name.col, e.to_string()))?;
            }
            "trans" => {
                let name = l.ident("a transition name")?;
                let src = l.ident("a source state")?;
                l.keyword("->")?;
                let dst = l.ident("a target state")?;
                let effect = l.vector(|s| s.parse::<i64>().ok(), "an integer")?;
                let weight = match l.toks.get(l.pos) {
                    Some(_) => {
                        let (wt, wv) = l.assignment("w")?;
                        match wv.parse::<u64>() {
                            Ok(w) if w > 0 => w,
                            _ => {
                                return Err(err(
                                    l.no,
                                    wt.col,
                                    format!("weight must be a positive integer, found `{wv}`"),
                                ))
                            }
                        }
                    }
                    None => 1,
                };
                l.finish()?;
                trans.push(PendingTrans {
                    line: l.no,
                    name,
                    src,
                    dst,
                    effect,
                    weight,
                });
            }
            "init" => {
                let state = l.ident("a state name")?;
                let v = l.vector(|s| s.parse::<u64>().ok(), "a natural number")?;
                l.finish()?;
                inits.push((l.no, kw.col, state, v));
            }
            "target" => {
                let state = l.ident("a state name")?;
                l.finish()?;
                target_toks.push((l.no, state));
            }
            other => {
                return Err(err(l.no, kw.col, format!("unknown declaration `{other}`")));
            }
        }
    }

    for t in trans {
        let s = resolve(&b, t.line, &t.src)?;
        let d = resolve(&b, t.line, &t.dst)?;
        check_dim(t.line, t.effect.0, dim, t.effect.1.len())?;
        b.transition(t.name.text, s, t.effect.1, d, t.weight)
            .map_err(|e| err(t.line, t.name.col, e.to_string()))?;
    }
    let init = match inits.as_slice() {
        [] => None,
        [(line, _, st, (col, v))] => {
            let q = resolve(&b, *line, st)?;
            check_dim(*line, *col, dim, v.len())?;
            Some(Config::new(q, v.clone()))
        }
        [_, (line, col, _, _), ..] => return Err(err(*line, *col, "duplicate `init`")),
    };
    let mut targets = Vec::new();
    for (line, st) in &target_toks {
        let q = resolve(&b, *line, st)?;
        if !targets.contains(&q) {
            targets.push(q);
        }
    }
    Ok(SystemFile {
        system: b.build(),
        init,
        targets,
    })
}

fn write_vec<T: std::fmt::Display>(out: &mut String, v: &[T]) {
    out.push('[');
    for x in v {
        write!(out, " {x}").unwrap();
    }
    out.push_str(" ]");
}

/// Canonical text of a system, with optional initial configuration and targets.
pub fn serialize_system(sys: &VassMdp, init: Option<&Config>, targets: &[StateId]) -> String {
    let mut out = String::new();
    writeln!(out, "vassmdp d={}", sys.dim()).unwrap();
    for q in sys.state_ids() {
        writeln!(out, "state {} owner={}", sys.name(q), sys.owner(q)).unwrap();
    }
    for t in sys.transitions() {
        write!(out, "trans {} {} -> {} ", t.name, sys.name(t.source), sys.name(t.target)).unwrap();
        write_vec(&mut out, &t.effect.0);
        writeln!(out, " w={}", t.weight).unwrap();
    }
    if let Some(c) = init {
        write!(out, "init {} ", sys.name(c.state)).unwrap();
        write_vec(&mut out, &c.counters.0);
        out.push('\n');
    }
    for &q in targets {
        writeln!(out, "target {}", sys.name(q)).unwrap();
    }
    out
}

/// Canonical text of a [`SystemFile`].
pub fn serialize_file(f: &SystemFile) -> String {
    serialize_system(&f.system, f.init.as_ref(), &f.targets)
}

/// Query file: `problem <name>`, `init <state> [ .. ]`, `target <state>`.
pub fn parse_query(text: &str, sys: &VassMdp) -> Result<QuerySpec, ParseError> {
    let mut problem = None;
    let mut init = None;
    let mut targets = Vec::new();
    let mut last = 0;
    for mut l in lines(text) {
        last = l.no;
        let kw = l.next("a declaration")?;
        match kw.text {
            "problem" => {
                let t = l.next("a problem name")?;
                let p: Problem = t.text.parse().map_err(|e: crate::query::UnknownProblem| {
                    err(l.no, t.col, e.to_string())
                })?;
                if problem.replace(p).is_some() {
                    return Err(err(l.no, kw.col, "duplicate `problem`"));
                }
            }
            "init" => {
                let st = l.ident("a state name")?;
                let q = sys
                    .lookup(st.text)
                    .ok_or_else(|| err(l.no, st.col, format!("unknown state `{}`", st.text)))?;
                let (col, v) = l.vector(|s| s.parse::<u64>().ok(), "a natural number")?;
                check_dim(l.no, col, sys.dim(), v.len())?;
                if init.replace(Config::new(q, v)).is_some() {
                    return Err(err(l.no, kw.col, "duplicate `init`"));
                }
            }
            "target" => {
                let st = l.ident("a state name")?;
                let q = sys
                    .lookup(st.text)
                    .ok_or_else(|| err(l.no, st.col, format!("unknown state `{}`", st.text)))?;
                if !targets.contains(&q) {
                    targets.push(q);
                }
            }
            other => return Err(err(l.no, kw.col, format!("unknown declaration `{other}`"))),
        }
        l.finish()?;
    }
    let problem = problem.ok_or_else(|| err(last + 1, 1, "missing `problem`"))?;
    let init = init.ok_or_else(|| err(last + 1, 1, "missing `init`"))?;
    if targets.is_empty() {
        return Err(err(last + 1, 1, "missing `target`"));
    }
    Ok(QuerySpec {
        problem,
        init,
        targets,
    })
}

pub fn serialize_query(q: &QuerySpec, sys: &VassMdp) -> String {
    let mut out = String::new();
    writeln!(out, "problem {}", q.problem).unwrap();
    write!(out, "init {} ", sys.name(q.init.state)).unwrap();
    write_vec(&mut out, &q.init.counters.0);
    out.push('\n');
    for &t in &q.targets {
        writeln!(out, "target {}", sys.name(t)).unwrap();
    }
    out
}
