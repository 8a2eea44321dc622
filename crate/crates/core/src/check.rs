//! Routing a query to the engine its system class admits.

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::finitemdp::{bounded_oracle, FiniteError};
use crate::limitsure::limit_sure_reach;
use crate::model::{remove_deadlocks, Classification, Config, ModelError, VassMdp};
use crate::mucalc::{
    extract_strategy, step_bound_and_beta, v1_as, v1_sure, vp_sure_complement, w1_as, w1_sure,
    wp_sure_complement, EvalOptions, Evaluation, Membership, NuTermination,
};
use crate::query::{Answer, Objective, Problem, Quantifier, QuerySpec};
use crate::sim::{estimate_reach, StrategyHandle};

/// The rows of the decidability table a system falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SystemClass {
    /// Probabilistic moves never change the counters.
    OneVass,
    /// Controller moves never change the counters, and no configuration deadlocks.
    DeadlockFreePVass,
    /// Controller moves never change the counters.
    PVass,
    General,
}

impl SystemClass {
    /// 1-VASS wins when a system is in both subclasses.
    pub fn of(c: &Classification) -> SystemClass {
        if c.is_one_vass {
            SystemClass::OneVass
        } else if c.is_p_vass && c.deadlock_free_all_configs {
            SystemClass::DeadlockFreePVass
        } else if c.is_p_vass {
            SystemClass::PVass
        } else {
            SystemClass::General
        }
    }
}

impl fmt::Display for SystemClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemClass::OneVass => "1-VASS-MDP",
            SystemClass::DeadlockFreePVass => "deadlock-free P-VASS-MDP",
            SystemClass::PVass => "P-VASS-MDP",
            SystemClass::General => "VASS-MDP",
        })
    }
}

/// `1-vass`, `p-vass`, `1-vass,p-vass` or `general`, then the deadlock flag.
pub fn class_line(c: &Classification) -> String {
    let kind = match (c.is_one_vass, c.is_p_vass) {
        (true, true) => "1-vass,p-vass",
        (true, false) => "1-vass",
        (false, true) => "p-vass",
        (false, false) => "general",
    };
    format!("{kind} deadlock-free={}", c.deadlock_free_all_configs)
}

/// The engine a (class, problem) pair is sent to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Fixpoint evaluation of the controller's winning region.
    OneVassFixpoint { theorem: u32 },
    /// Fixpoint evaluation of the environment's winning region.
    PVassComplement { theorem: u32 },
    /// Dimension reduction down to a finite MDP.
    LimitSure { theorem: u32 },
    Undecidable { theorem: u32 },
    Open,
}

impl Route {
    pub fn is_exact_engine(&self) -> bool {
        !matches!(self, Route::Undecidable { .. } | Route::Open)
    }
}

/// The decidability table.
pub fn dispatch(class: SystemClass, problem: Problem) -> Route {
    use Objective::*;
    use Quantifier::*;
    match class {
        SystemClass::OneVass => match (problem.quantifier, problem.objective) {
            (Sure, _) => Route::OneVassFixpoint { theorem: 7 },
            (AlmostSure, Reach) => Route::OneVassFixpoint { theorem: 8 },
            (AlmostSure, Buchi) => Route::OneVassFixpoint { theorem: 9 },
            (LimitSure, Reach) => Route::LimitSure { theorem: 16 },
            (LimitSure, Buchi) => Route::Open,
        },
        SystemClass::DeadlockFreePVass => match problem.quantifier {
            Sure => Route::PVassComplement { theorem: 5 },
            _ => Route::Undecidable { theorem: 15 },
        },
        SystemClass::PVass => Route::Undecidable { theorem: 3 },
        SystemClass::General => Route::Undecidable { theorem: 1 },
    }
}

/// The statement a table cell rests on.
pub fn reference(class: SystemClass, problem: Problem) -> String {
    match dispatch(class, problem) {
        Route::OneVassFixpoint { theorem } | Route::LimitSure { theorem } => {
            format!("Theorem {theorem}: {problem} is decidable for 1-VASS-MDPs")
        }
        Route::PVassComplement { theorem } => {
            format!("Theorem {theorem}: {problem} is decidable for deadlock-free P-VASS-MDPs")
        }
        Route::Undecidable { theorem: 1 } => {
            format!("Theorem 1: {problem} is undecidable for 2-dimensional deadlock-free VASS-MDPs")
        }
        Route::Undecidable { theorem: 3 } => {
            format!("Theorem 3: {problem} is undecidable for 2-dimensional P-VASS-MDPs")
        }
        Route::Undecidable { theorem } => format!(
            "Theorem {theorem}: {problem} is undecidable for 2-dimensional deadlock-free P-VASS-MDPs"
        ),
        Route::Open => format!("{problem} is open for 1-VASS-MDPs"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateKind {
    WinningSet,
    Strategy,
    ReductionTrace,
    FixpointTrace,
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertificateKind::WinningSet => "winning-set",
            CertificateKind::Strategy => "strategy",
            CertificateKind::ReductionTrace => "reduction-trace",
            CertificateKind::FixpointTrace => "fixpoint-trace",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub text: String,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub answer: Answer,
    pub problem: Problem,
    pub class: SystemClass,
    pub route: Route,
    pub reference: String,
    pub certificates: Vec<Certificate>,
    /// Heuristic observations; never part of the answer.
    pub notes: Vec<String>,
    /// Set when the answer rests on a ν-iteration that used an accelerated jump.
    pub accelerated: bool,
}

impl Verdict {
    pub fn certificate(&self, kind: CertificateKind) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.kind == kind)
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        writeln!(out, "answer: {}", self.answer).unwrap();
        writeln!(out, "problem: {}", self.problem).unwrap();
        writeln!(out, "class: {}", self.class).unwrap();
        writeln!(out, "reference: {}", self.reference).unwrap();
        for n in &self.notes {
            writeln!(out, "note: {n}").unwrap();
        }
        for c in &self.certificates {
            writeln!(out, "certificate {}:", c.kind).unwrap();
            for l in c.text.lines() {
                writeln!(out, "  {l}").unwrap();
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    pub eval: EvalOptions,
    /// Counter cap for the bounded oracle on undecidable cells.
    pub cap: Option<u64>,
    /// Simulation runs on undecidable cells when the oracle cannot help.
    pub runs: Option<u64>,
    pub seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("query has no target states")]
    NoTargets,
    #[error("invalid query: {0}")]
    Model(#[from] ModelError),
}

const SIM_STEPS: usize = 1000;

fn membership_answer(m: Membership, member_means_yes: bool) -> Answer {
    match m {
        Membership::Member => Answer::from_bool(member_means_yes),
        Membership::NotMember => Answer::from_bool(!member_means_yes),
        Membership::Unknown => Answer::Unknown(NuTermination::BoundExhausted.to_string()),
    }
}

fn winning_set_text(sys: &VassMdp, e: &Evaluation) -> String {
    if e.exact {
        e.upper.serialize(sys)
    } else {
        format!(
            "lower:\n{}upper:\n{}",
            e.lower.serialize(sys),
            e.upper.serialize(sys)
        )
    }
}

/// Evaluate with budgets 16, 64, 256, ... up to `opts.nu_budget`, stopping
/// at the first one that decides `init`. Nested greatest fixpoints multiply
/// their budgets, and both passes are sound at any budget.
fn escalate<E>(
    opts: &EvalOptions,
    init: &Config,
    mut f: impl FnMut(&EvalOptions) -> Result<Evaluation, E>,
) -> Result<Evaluation, E> {
    let mut budget = opts.nu_budget.min(16);
    loop {
        let o = EvalOptions {
            nu_budget: budget,
            ..opts.clone()
        };
        let e = f(&o)?;
        if budget >= opts.nu_budget || e.decide(init) != Membership::Unknown {
            return Ok(e);
        }
        budget = (budget * 4).min(opts.nu_budget);
    }
}

/// Answer `query` on `sys`. Malformed queries are errors; everything else,
/// including undecidable cells and exhausted budgets, is a verdict.
pub fn check(sys: &VassMdp, query: &QuerySpec, opts: &CheckOptions) -> Result<Verdict, CheckError> {
    if query.targets.is_empty() {
        return Err(CheckError::NoTargets);
    }
    sys.check_config(&query.init)?;
    for &t in &query.targets {
        if t.0 >= sys.num_states() {
            return Err(ModelError::UnknownState(format!("#{}", t.0)).into());
        }
    }
    let class = SystemClass::of(&sys.classify());
    let route = dispatch(class, query.problem);
    let mut v = Verdict {
        answer: Answer::OpenProblem,
        problem: query.problem,
        class,
        route,
        reference: reference(class, query.problem),
        certificates: Vec::new(),
        notes: Vec::new(),
        accelerated: false,
    };
    let cert = |v: &mut Verdict, kind, text: String| v.certificates.push(Certificate { kind, text });
    match route {
        Route::OneVassFixpoint { .. } => {
            let df = remove_deadlocks(sys).expect("1-VASS-MDP");
            let s = &df.system;
            let p = query.problem;
            let e = escalate(&opts.eval, &query.init, |o| match (p.quantifier, p.objective) {
                (Quantifier::Sure, Objective::Reach) => v1_sure(s, &query.targets, o),
                (Quantifier::Sure, Objective::Buchi) => w1_sure(s, &query.targets, o),
                (Quantifier::AlmostSure, Objective::Reach) => v1_as(s, &query.targets, o),
                _ => w1_as(s, &query.targets, o),
            })
            .expect("1-VASS-MDP after deadlock removal");
            let m = e.decide(&query.init);
            v.answer = membership_answer(m, true);
            v.accelerated = e.trace.used_verified_acceleration();
            cert(&mut v, CertificateKind::WinningSet, winning_set_text(s, &e));
            if m == Membership::Member && p.objective == Objective::Reach {
                let trace = match (&e.lower_trace, e.exact) {
                    (Some(t), false) => t,
                    _ => &e.trace,
                };
                if let Some(stages) = trace.first_mu() {
                    if let Ok(strat) = extract_strategy(s, stages, &query.targets) {
                        let (n, beta) = step_bound_and_beta(s, stages);
                        let text = format!("N={n} beta={beta}\n{}", strat.table_text(s));
                        cert(&mut v, CertificateKind::Strategy, text);
                    }
                }
            }
            cert(&mut v, CertificateKind::FixpointTrace, e.trace.render(s));
        }
        Route::PVassComplement { .. } => {
            let e = escalate(&opts.eval, &query.init, |o| match query.problem.objective {
                Objective::Reach => vp_sure_complement(sys, &query.targets, o),
                Objective::Buchi => wp_sure_complement(sys, &query.targets, o),
            })
            .expect("deadlock-free P-VASS-MDP");
            v.answer = membership_answer(e.decide(&query.init), false);
            v.accelerated = e.trace.used_verified_acceleration();
            cert(&mut v, CertificateKind::WinningSet, winning_set_text(sys, &e));
            cert(&mut v, CertificateKind::FixpointTrace, e.trace.render(sys));
        }
        Route::LimitSure { .. } => match limit_sure_reach(sys, &query.init, &query.targets) {
            Ok(out) => {
                v.answer = Answer::from_bool(out.answer);
                let mut text = String::new();
                let mut prev = sys;
                for (i, r) in out.reductions.iter().enumerate() {
                    writeln!(text, "reduction {} (dimension {}):", i + 1, r.system.dim()).unwrap();
                    text.push_str(&r.trace_text(prev));
                    prev = &r.system;
                }
                cert(&mut v, CertificateKind::ReductionTrace, text);
            }
            Err(e) => v.answer = Answer::Unknown(e.to_string()),
        },
        Route::Undecidable { theorem } => {
            v.answer = Answer::UndecidableClass(theorem);
            best_effort(sys, query, opts, &mut v.notes);
        }
        Route::Open => v.answer = Answer::OpenProblem,
    }
    Ok(v)
}

/// Heuristic evidence for undecidable cells, only when asked for.
fn best_effort(sys: &VassMdp, query: &QuerySpec, opts: &CheckOptions, notes: &mut Vec<String>) {
    if let Some(cap) = opts.cap {
        match bounded_oracle(sys, cap, query.problem, &query.init, &query.targets) {
            Ok(b) => {
                notes.push(format!(
                    "heuristic: bounded oracle with cap {cap} says {}",
                    Answer::from_bool(b)
                ));
                return;
            }
            Err(FiniteError::CapNotClosed(c)) => {
                notes.push(format!("heuristic: not closed under cap {cap}, {c} exceeds it"))
            }
            Err(e) => notes.push(format!("heuristic: bounded oracle failed: {e}")),
        }
    }
    if let Some(runs) = opts.runs.filter(|&r| r > 0) {
        let f = estimate_reach(
            sys,
            &query.init,
            &StrategyHandle::Uniform,
            &query.targets,
            runs,
            SIM_STEPS,
            opts.seed,
        );
        notes.push(format!(
            "heuristic: uniform strategy reached a target in {f} of {runs} runs within {SIM_STEPS} steps (seed {}), a lower estimate",
            opts.seed
        ));
    }
}
