//! Fixpoint evaluation over upward-closed sets.
//!
//! Every formula is evaluated in one or two passes. The upper pass returns a
//! superset of the true semantics: least fixpoints are iterated to a
//! pre-fixpoint, greatest fixpoints descend from the full space and may stop
//! at any iterate, and ω-acceleration is only taken after it is proved by
//! [`super::accel::verify`]. When some greatest fixpoint of the upper pass
//! does not stabilize, a lower pass computes a subset: its greatest fixpoints
//! only return post-fixpoints and give up with ∅. Membership in the lower set
//! is a sound YES, absence from the upper set a sound NO.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::model::{Config, Owner, TransId, VassMdp};
use crate::upset::{side_transitions, UpwardClosedSet};

use super::accel;
use super::formula::{check_guards, Formula};
use super::MucalcError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    Upper,
    Lower,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    /// Maximum number of iterations of each greatest fixpoint.
    pub nu_budget: usize,
    /// Whether greatest fixpoints may jump ahead by ω-acceleration.
    pub accelerate: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            nu_budget: 1000,
            accelerate: true,
        }
    }
}

/// Values of free variables.
#[derive(Clone, Debug, Default)]
pub struct Env {
    vars: BTreeMap<String, UpwardClosedSet>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn with(mut self, var: &str, set: UpwardClosedSet) -> Self {
        self.vars.insert(var.to_string(), set);
        self
    }

    pub fn get(&self, var: &str) -> Option<&UpwardClosedSet> {
        self.vars.get(var)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NuTermination {
    Stabilized,
    Accelerated,
    BoundExhausted,
}

impl fmt::Display for NuTermination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NuTermination::Stabilized => "STABILIZED",
            NuTermination::Accelerated => "ACCELERATED",
            NuTermination::BoundExhausted => "BOUND_EXHAUSTED",
        })
    }
}

/// A jump of a descending iteration to the stable part of a shifting pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccelerationEvent {
    /// Index of the iterate the pattern was detected at.
    pub iteration: usize,
    /// Per-iteration shift of the moving generators.
    pub shift: Vec<u64>,
    /// The set the iteration resumed from.
    pub stable: UpwardClosedSet,
    /// Whether the jump was proved to keep a superset of the greatest fixpoint.
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FixpointRecord {
    Mu {
        var: String,
        /// `F_0 = ∅ ⊂ F_1 ⊂ … ⊂ F_N`, the last entry being the result.
        stages: Vec<UpwardClosedSet>,
        /// Nested fixpoints of the last body evaluation.
        inner: Vec<FixpointRecord>,
    },
    Nu {
        var: String,
        /// Descending iterates, starting with the full space.
        iterates: Vec<UpwardClosedSet>,
        accelerations: Vec<AccelerationEvent>,
        termination: NuTermination,
        inner: Vec<FixpointRecord>,
    },
}

impl FixpointRecord {
    fn inner(&self) -> &[FixpointRecord] {
        match self {
            FixpointRecord::Mu { inner, .. } | FixpointRecord::Nu { inner, .. } => inner,
        }
    }

    fn render(&self, sys: &VassMdp, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match self {
            FixpointRecord::Mu { var, stages, .. } => {
                writeln!(out, "{pad}mu {var}: {} stages", stages.len() - 1).unwrap();
                for (j, s) in stages.iter().enumerate().skip(1) {
                    writeln!(out, "{pad}  F_{j}:").unwrap();
                    for line in s.serialize(sys).lines() {
                        writeln!(out, "{pad}    {line}").unwrap();
                    }
                }
            }
            FixpointRecord::Nu {
                var,
                iterates,
                accelerations,
                termination,
                ..
            } => {
                writeln!(
                    out,
                    "{pad}nu {var}: {} iterations, {termination}",
                    iterates.len() - 1
                )
                .unwrap();
                for a in accelerations {
                    writeln!(
                        out,
                        "{pad}  accelerated at iteration {} shift {} verified={}",
                        a.iteration,
                        crate::model::CounterVec(a.shift.clone()),
                        a.verified
                    )
                    .unwrap();
                }
                writeln!(out, "{pad}  final:").unwrap();
                for line in iterates.last().unwrap().serialize(sys).lines() {
                    writeln!(out, "{pad}    {line}").unwrap();
                }
            }
        }
        for r in self.inner() {
            r.render(sys, depth + 1, out);
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FixpointTrace {
    pub records: Vec<FixpointRecord>,
}

impl FixpointTrace {
    /// Stages of the first least fixpoint in depth-first order.
    pub fn first_mu(&self) -> Option<&[UpwardClosedSet]> {
        fn go(rs: &[FixpointRecord]) -> Option<&[UpwardClosedSet]> {
            for r in rs {
                if let FixpointRecord::Mu { stages, .. } = r {
                    return Some(stages);
                }
                if let Some(s) = go(r.inner()) {
                    return Some(s);
                }
            }
            None
        }
        go(&self.records)
    }

    /// All greatest-fixpoint records, outermost first.
    pub fn nu_records(&self) -> Vec<&FixpointRecord> {
        fn go<'a>(rs: &'a [FixpointRecord], out: &mut Vec<&'a FixpointRecord>) {
            for r in rs {
                if matches!(r, FixpointRecord::Nu { .. }) {
                    out.push(r);
                }
                go(r.inner(), out);
            }
        }
        let mut out = Vec::new();
        go(&self.records, &mut out);
        out
    }

    /// Whether some greatest fixpoint took a verified acceleration.
    pub fn used_verified_acceleration(&self) -> bool {
        self.nu_records().iter().any(|r| match r {
            FixpointRecord::Nu { accelerations, .. } => accelerations.iter().any(|a| a.verified),
            _ => false,
        })
    }

    pub fn render(&self, sys: &VassMdp) -> String {
        let mut out = String::new();
        for r in &self.records {
            r.render(sys, 0, &mut out);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Member,
    NotMember,
    Unknown,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    /// Superset of the semantics.
    pub upper: UpwardClosedSet,
    /// Subset of the semantics; equal to `upper` when `exact`.
    pub lower: UpwardClosedSet,
    pub exact: bool,
    /// Trace of the upper pass.
    pub trace: FixpointTrace,
    /// Trace of the lower pass, when one was needed.
    pub lower_trace: Option<FixpointTrace>,
}

impl Evaluation {
    pub fn decide(&self, c: &Config) -> Membership {
        if self.lower.contains(c) {
            Membership::Member
        } else if !self.upper.contains(c) {
            Membership::NotMember
        } else {
            Membership::Unknown
        }
    }
}

pub(crate) struct Evaluator<'a> {
    pub(crate) sys: &'a VassMdp,
    opts: &'a EvalOptions,
    mode: Mode,
    all: Vec<TransId>,
    one: Vec<TransId>,
    prob: Vec<TransId>,
}

type Vars = BTreeMap<String, UpwardClosedSet>;

impl<'a> Evaluator<'a> {
    pub(crate) fn new(sys: &'a VassMdp, opts: &'a EvalOptions, mode: Mode) -> Self {
        Evaluator {
            sys,
            opts,
            mode,
            all: sys.transitions().iter().map(|t| t.id).collect(),
            one: side_transitions(sys, Owner::One),
            prob: side_transitions(sys, Owner::Prob),
        }
    }

    fn with_var<T>(
        vars: &mut Vars,
        var: &str,
        val: UpwardClosedSet,
        f: impl FnOnce(&mut Vars) -> T,
    ) -> T {
        let old = vars.insert(var.to_string(), val);
        let r = f(vars);
        match old {
            Some(o) => vars.insert(var.to_string(), o),
            None => vars.remove(var),
        };
        r
    }

    /// The set and whether it is exact.
    pub(crate) fn eval(
        &self,
        f: &Formula,
        vars: &mut Vars,
        records: &mut Vec<FixpointRecord>,
    ) -> Result<(UpwardClosedSet, bool), MucalcError> {
        let sys = self.sys;
        Ok(match f {
            Formula::Atom(q) => (UpwardClosedSet::atoms(sys.dim(), [*q]), true),
            Formula::Var(v) => (
                vars.get(v)
                    .cloned()
                    .ok_or_else(|| MucalcError::FreeVariable(v.clone()))?,
                true,
            ),
            Formula::And(a, b) | Formula::Or(a, b) => {
                let (x, ex) = self.eval(a, vars, records)?;
                let (y, ey) = self.eval(b, vars, records)?;
                let z = if matches!(f, Formula::And(..)) {
                    x.intersect(&y)?
                } else {
                    x.union(&y)?
                };
                (z, ex && ey)
            }
            Formula::Diamond(owner, g) => {
                let (x, ex) = self.eval(g, vars, records)?;
                let ts = match owner {
                    None => &self.all,
                    Some(Owner::One) => &self.one,
                    Some(Owner::Prob) => &self.prob,
                };
                (x.pre_exists(sys, ts)?, ex)
            }
            Formula::GuardedBox(side, g) => {
                let (x, ex) = self.eval(g, vars, records)?;
                (x.pre_forall_zero(sys, *side)?, ex)
            }
            Formula::Mu(var, body) if var == "_ff" && **body == Formula::var("_ff") => {
                (UpwardClosedSet::empty(sys.dim()), true)
            }
            Formula::Nu(var, body) if var == "_tt" && **body == Formula::var("_tt") => {
                (UpwardClosedSet::full(sys), true)
            }
            Formula::Mu(var, body) => self.eval_mu(var, body, vars, records)?,
            Formula::Nu(var, body) => self.eval_nu(var, body, vars, records)?,
        })
    }

    fn eval_mu(
        &self,
        var: &str,
        body: &Formula,
        vars: &mut Vars,
        records: &mut Vec<FixpointRecord>,
    ) -> Result<(UpwardClosedSet, bool), MucalcError> {
        let mut y = UpwardClosedSet::empty(self.sys.dim());
        let mut stages = vec![y.clone()];
        let mut exact = true;
        loop {
            let mut inner = Vec::new();
            let (h, ex) =
                Self::with_var(vars, var, y.clone(), |vars| self.eval(body, vars, &mut inner))?;
            exact &= ex;
            let next = y.union(&h)?;
            if next == y {
                records.push(FixpointRecord::Mu {
                    var: var.to_string(),
                    stages,
                    inner,
                });
                return Ok((y, exact));
            }
            stages.push(next.clone());
            y = next;
        }
    }

    fn eval_nu(
        &self,
        var: &str,
        body: &Formula,
        vars: &mut Vars,
        records: &mut Vec<FixpointRecord>,
    ) -> Result<(UpwardClosedSet, bool), MucalcError> {
        let sys = self.sys;
        let min_run = 3 + sys.max_abs_effect() as usize;
        let mut x = UpwardClosedSet::full(sys);
        let mut iterates = vec![x.clone()];
        let mut accelerations = Vec::new();
        let mut base = 0;
        let mut next_try = min_run;
        let mut inner = Vec::new();
        for _ in 0..self.opts.nu_budget {
            inner = Vec::new();
            let (h, ex) =
                Self::with_var(vars, var, x.clone(), |vars| self.eval(body, vars, &mut inner))?;
            let y = x.intersect(&h)?;
            iterates.push(y.clone());
            if y == x {
                let termination = if accelerations.is_empty() {
                    NuTermination::Stabilized
                } else {
                    NuTermination::Accelerated
                };
                records.push(FixpointRecord::Nu {
                    var: var.to_string(),
                    iterates,
                    accelerations,
                    termination,
                    inner,
                });
                return Ok((y, ex));
            }
            x = y;
            if !self.opts.accelerate {
                continue;
            }
            let Some(p) = accel::detect(&iterates[base..], min_run) else {
                continue;
            };
            if p.len < next_try {
                continue;
            }
            let verified = match self.mode {
                Mode::Upper => accel::verify(sys, var, body, vars, &p),
                Mode::Lower => false,
            };
            if self.mode == Mode::Upper && !verified {
                next_try = 2 * p.len;
                continue;
            }
            let stable = UpwardClosedSet::from_basis(sys.dim(), p.stable_basis());
            accelerations.push(AccelerationEvent {
                iteration: iterates.len() - 1,
                shift: p.delta.clone(),
                stable: stable.clone(),
                verified,
            });
            x = stable;
            iterates.push(x.clone());
            base = iterates.len() - 1;
            next_try = min_run;
        }
        records.push(FixpointRecord::Nu {
            var: var.to_string(),
            iterates,
            accelerations,
            termination: NuTermination::BoundExhausted,
            inner,
        });
        Ok(match self.mode {
            Mode::Upper => (x, false),
            Mode::Lower => (UpwardClosedSet::empty(sys.dim()), false),
        })
    }
}

/// Evaluate `f` under `env`, checking single-sidedness first.
pub fn eval(
    sys: &VassMdp,
    f: &Formula,
    env: &Env,
    opts: &EvalOptions,
) -> Result<Evaluation, MucalcError> {
    for v in f.free_vars() {
        match env.get(&v) {
            Some(s) if s.dim() != sys.dim() => {
                return Err(MucalcError::Upset(crate::upset::UpsetError::DimensionMismatch {
                    expected: sys.dim(),
                    found: s.dim(),
                }))
            }
            Some(_) => {}
            None => return Err(MucalcError::FreeVariable(v)),
        }
    }
    check_guards(sys, f)?;
    let mut vars: Vars = env.vars.clone();
    let mut records = Vec::new();
    let (upper, exact) = Evaluator::new(sys, opts, Mode::Upper).eval(f, &mut vars, &mut records)?;
    let trace = FixpointTrace { records };
    if exact {
        return Ok(Evaluation {
            lower: upper.clone(),
            upper,
            exact,
            trace,
            lower_trace: None,
        });
    }
    let mut lower_records = Vec::new();
    let (lower, _) =
        Evaluator::new(sys, opts, Mode::Lower).eval(f, &mut vars, &mut lower_records)?;
    debug_assert!(lower.is_subset(&upper).unwrap());
    Ok(Evaluation {
        upper,
        lower,
        exact,
        trace,
        lower_trace: Some(FixpointTrace {
            records: lower_records,
        }),
    })
}
