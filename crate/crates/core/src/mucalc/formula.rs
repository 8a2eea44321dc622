//! Formulas of the single-sided μ-calculus and their text syntax.
//!
//! ```text
//! formula := ("mu" | "nu") IDENT "." formula | disj
//! disj    := conj ("|" conj)*
//! conj    := unary ("&" unary)*
//! unary   := ("<1>" | "<P>" | "<any>" | "[1]" | "[P]") unary
//!          | ("mu" | "nu") IDENT "." formula
//!          | "(" formula ")" | "true" | "false" | IDENT
//! ```
//!
//! An identifier is a bound variable when an enclosing binder names it and a
//! control state of the system otherwise.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::model::{Owner, StateId, VassMdp};
use crate::upset::check_zero_side;

use super::MucalcError;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(StateId),
    Var(String),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// `◇φ` over the transitions of the given owner, or all of them.
    Diamond(Option<Owner>, Box<Formula>),
    /// `Q_side ∧ □φ`.
    GuardedBox(Owner, Box<Formula>),
    Mu(String, Box<Formula>),
    Nu(String, Box<Formula>),
}

impl Formula {
    pub fn atom(q: StateId) -> Formula {
        Formula::Atom(q)
    }

    pub fn var(name: &str) -> Formula {
        Formula::Var(name.to_string())
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn diamond(f: Formula) -> Formula {
        Formula::Diamond(None, Box::new(f))
    }

    pub fn diamond_of(owner: Owner, f: Formula) -> Formula {
        Formula::Diamond(Some(owner), Box::new(f))
    }

    pub fn guarded_box(side: Owner, f: Formula) -> Formula {
        Formula::GuardedBox(side, Box::new(f))
    }

    pub fn mu(var: &str, f: Formula) -> Formula {
        Formula::Mu(var.to_string(), Box::new(f))
    }

    pub fn nu(var: &str, f: Formula) -> Formula {
        Formula::Nu(var.to_string(), Box::new(f))
    }

    /// The empty set, written as a trivial least fixpoint.
    pub fn ff() -> Formula {
        Formula::mu("_ff", Formula::var("_ff"))
    }

    /// The full space, written as a trivial greatest fixpoint.
    pub fn tt() -> Formula {
        Formula::nu("_tt", Formula::var("_tt"))
    }

    pub fn or_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        items.into_iter().reduce(Formula::or).unwrap_or_else(Formula::ff)
    }

    pub fn and_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        items.into_iter().reduce(Formula::and).unwrap_or_else(Formula::tt)
    }

    /// Disjunction of the atoms of `states`.
    pub fn states(states: impl IntoIterator<Item = StateId>) -> Formula {
        Formula::or_all(states.into_iter().map(Formula::Atom))
    }

    /// Disjunction of the atoms of all states owned by `owner`.
    pub fn owned(sys: &VassMdp, owner: Owner) -> Formula {
        Formula::states(sys.owned_by(owner))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(_) => {}
            Formula::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Diamond(_, f) | Formula::GuardedBox(_, f) => f.collect_free(bound, out),
            Formula::Mu(v, f) | Formula::Nu(v, f) => {
                bound.push(v.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    fn guard_sides(&self, out: &mut BTreeSet<Owner>) {
        match self {
            Formula::Atom(_) | Formula::Var(_) => {}
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.guard_sides(out);
                b.guard_sides(out);
            }
            Formula::Diamond(_, f) | Formula::Mu(_, f) | Formula::Nu(_, f) => f.guard_sides(out),
            Formula::GuardedBox(side, f) => {
                out.insert(*side);
                f.guard_sides(out);
            }
        }
    }

    /// Fully parenthesized text in the parser's syntax.
    pub fn to_text(&self, sys: &VassMdp) -> String {
        let mut s = String::new();
        self.write_text(sys, &mut s);
        s
    }

    fn write_text(&self, sys: &VassMdp, s: &mut String) {
        match self {
            Formula::Atom(q) => s.push_str(sys.name(*q)),
            Formula::Var(v) => s.push_str(v),
            Formula::And(a, b) | Formula::Or(a, b) => {
                let op = if matches!(self, Formula::And(..)) { " & " } else { " | " };
                s.push('(');
                a.write_text(sys, s);
                s.push_str(op);
                b.write_text(sys, s);
                s.push(')');
            }
            Formula::Diamond(owner, f) => {
                match owner {
                    Some(o) => write!(s, "<{o}>").unwrap(),
                    None => s.push_str("<any>"),
                }
                f.write_text(sys, s);
            }
            Formula::GuardedBox(side, f) => {
                write!(s, "[{side}]").unwrap();
                f.write_text(sys, s);
            }
            Formula::Mu(v, f) | Formula::Nu(v, f) => {
                let kw = if matches!(self, Formula::Mu(..)) { "mu" } else { "nu" };
                write!(s, "({kw} {v}. ").unwrap();
                f.write_text(sys, s);
                s.push(')');
            }
        }
    }
}

/// The guard side shared by every `GuardedBox` of `f`, after checking that
/// `f` is closed and that the side's transitions are all zero-effect.
/// Formulas without boxes have no side.
pub fn check_single_sided(sys: &VassMdp, f: &Formula) -> Result<Option<Owner>, MucalcError> {
    if let Some(v) = f.free_vars().into_iter().next() {
        return Err(MucalcError::FreeVariable(v));
    }
    check_guards(sys, f)
}

pub(crate) fn check_guards(sys: &VassMdp, f: &Formula) -> Result<Option<Owner>, MucalcError> {
    let mut sides = BTreeSet::new();
    f.guard_sides(&mut sides);
    if sides.len() > 1 {
        return Err(MucalcError::MixedGuards);
    }
    match sides.into_iter().next() {
        None => Ok(None),
        Some(side) => {
            check_zero_side(sys, side).map_err(|e| match e {
                crate::upset::UpsetError::NotZeroEffectSide(t) => MucalcError::NotSingleSided(t),
                other => MucalcError::Upset(other),
            })?;
            Ok(Some(side))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Dot,
    And,
    Or,
    LParen,
    RParen,
    Diamond(Option<Owner>),
    Box(Owner),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, MucalcError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, msg: &str| MucalcError::Parse {
        pos,
        msg: msg.to_string(),
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'.' => Tok::Dot,
            b'&' => Tok::And,
            b'|' => Tok::Or,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'<' | b'[' => {
                let close = if c == b'<' { '>' } else { ']' };
                let rest = &text[i + 1..];
                let end = rest
                    .find(close)
                    .ok_or_else(|| err(start, "unterminated modality"))?;
                let inner = &rest[..end];
                i += end + 1;
                match (c, inner) {
                    (b'<', "1") => Tok::Diamond(Some(Owner::One)),
                    (b'<', "P") => Tok::Diamond(Some(Owner::Prob)),
                    (b'<', "any") => Tok::Diamond(None),
                    (b'[', "1") => Tok::Box(Owner::One),
                    (b'[', "P") => Tok::Box(Owner::Prob),
                    _ => return Err(err(start, &format!("unknown modality `{inner}`"))),
                }
            }
            c if c.is_ascii_alphanumeric() || c == b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                let id = text[i..j].to_string();
                i = j - 1;
                Tok::Ident(id)
            }
            _ => return Err(err(start, &format!("unexpected character `{}`", c as char))),
        };
        i += 1;
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    sys: &'a VassMdp,
    bound: Vec<String>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err(&self, msg: &str) -> MucalcError {
        MucalcError::Parse {
            pos: self.offset(),
            msg: msg.to_string(),
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), MucalcError> {
        if self.peek() == Some(t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {what}")))
        }
    }

    fn formula(&mut self) -> Result<Formula, MucalcError> {
        let mut f = self.conj()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            f = Formula::or(f, self.conj()?);
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<Formula, MucalcError> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, MucalcError> {
        match self.peek().cloned() {
            Some(Tok::Diamond(o)) => {
                self.pos += 1;
                Ok(Formula::Diamond(o, Box::new(self.unary()?)))
            }
            Some(Tok::Box(side)) => {
                self.pos += 1;
                Ok(Formula::guarded_box(side, self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Ident(id)) => {
                self.pos += 1;
                match id.as_str() {
                    "mu" | "nu" => {
                        let var = match self.peek().cloned() {
                            Some(Tok::Ident(v)) => v,
                            _ => return Err(self.err("expected variable name")),
                        };
                        self.pos += 1;
                        self.expect(&Tok::Dot, "`.`")?;
                        self.bound.push(var.clone());
                        let body = self.formula()?;
                        self.bound.pop();
                        Ok(if id == "mu" {
                            Formula::mu(&var, body)
                        } else {
                            Formula::nu(&var, body)
                        })
                    }
                    "true" => Ok(Formula::tt()),
                    "false" => Ok(Formula::ff()),
                    _ if self.bound.contains(&id) => Ok(Formula::Var(id)),
                    _ => match self.sys.lookup(&id) {
                        Some(q) => Ok(Formula::Atom(q)),
                        None => {
                            self.pos -= 1;
                            Err(self.err(&format!("`{id}` is neither a bound variable nor a state")))
                        }
                    },
                }
            }
            _ => Err(self.err("expected a formula")),
        }
    }
}

/// Parse a closed formula over the state names of `sys`.
pub fn parse_formula(text: &str, sys: &VassMdp) -> Result<Formula, MucalcError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        sys,
        bound: Vec::new(),
    };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(f)
}
