//! Formulas characterizing the winning regions of the qualitative problems.
//!
//! The first four apply to 1-VASS-MDPs, where probabilistic moves are
//! zero-effect and boxes are guarded by `Q_P`. The last two apply to
//! deadlock-free P-VASS-MDPs and describe where the controller LOSES.

use crate::model::{Owner, StateId, VassMdp};

use super::eval::{eval, Env, EvalOptions, Evaluation};
use super::formula::Formula;
use super::MucalcError;

struct Parts {
    t: Formula,
    not_t: Formula,
    q1: Formula,
    qp: Formula,
}

fn parts(sys: &VassMdp, targets: &[StateId]) -> Parts {
    Parts {
        t: Formula::states(targets.iter().copied()),
        not_t: Formula::states(sys.state_ids().filter(|q| !targets.contains(q))),
        q1: Formula::owned(sys, Owner::One),
        qp: Formula::owned(sys, Owner::Prob),
    }
}

fn v(name: &str) -> Formula {
    Formula::var(name)
}

fn or3(a: Formula, b: Formula, c: Formula) -> Formula {
    Formula::or(Formula::or(a, b), c)
}

/// `(Q_1 ∧ ◇(X ∧ Y)) ∨ (◇Y ∧ Q_P ∧ □X)`.
fn inv_pre(p: &Parts, x: Formula, y: Formula) -> Formula {
    Formula::or(
        Formula::and(p.q1.clone(), Formula::diamond(Formula::and(x.clone(), y.clone()))),
        Formula::and(
            Formula::and(Formula::diamond(y), p.qp.clone()),
            Formula::guarded_box(Owner::Prob, x),
        ),
    )
}

/// `μX. T ∨ (Q_1 ∧ ◇X) ∨ (Q_P ∧ □X)`.
pub fn v1_sure_formula(sys: &VassMdp, targets: &[StateId]) -> Formula {
    let p = parts(sys, targets);
    Formula::mu(
        "X",
        or3(
            p.t,
            Formula::and(p.q1, Formula::diamond(v("X"))),
            Formula::guarded_box(Owner::Prob, v("X")),
        ),
    )
}

/// `νY. μX. (T ∨ (Q_P ∧ □X) ∨ (Q_1 ∧ ◇X)) ∧ (¬T ∨ Q_1 ∨ (Q_P ∧ □Y)) ∧ (¬T ∨ Q_P ∨ ◇Y)`.
pub fn w1_sure_formula(sys: &VassMdp, targets: &[StateId]) -> Formula {
    let p = parts(sys, targets);
    let reach = or3(
        p.t.clone(),
        Formula::guarded_box(Owner::Prob, v("X")),
        Formula::and(p.q1.clone(), Formula::diamond(v("X"))),
    );
    let env_stays = or3(p.not_t.clone(), p.q1, Formula::guarded_box(Owner::Prob, v("Y")));
    let ctrl_stays = or3(p.not_t, p.qp, Formula::diamond(v("Y")));
    Formula::nu(
        "Y",
        Formula::mu("X", Formula::and(Formula::and(reach, env_stays), ctrl_stays)),
    )
}

/// `νX. μY. T ∨ InvPre(X, Y)`.
pub fn v1_as_formula(sys: &VassMdp, targets: &[StateId]) -> Formula {
    let p = parts(sys, targets);
    let body = Formula::or(p.t.clone(), inv_pre(&p, v("X"), v("Y")));
    Formula::nu("X", Formula::mu("Y", body))
}

/// `νX. InvPre(X, μY. T ∨ InvPre(X, Y))`.
pub fn w1_as_formula(sys: &VassMdp, targets: &[StateId]) -> Formula {
    let p = parts(sys, targets);
    let reach = Formula::mu("Y", Formula::or(p.t.clone(), inv_pre(&p, v("X"), v("Y"))));
    Formula::nu("X", inv_pre(&p, v("X"), reach))
}

fn avoid_step(p: &Parts) -> Formula {
    Formula::and(
        Formula::and(p.not_t.clone(), Formula::or(p.q1.clone(), Formula::diamond(v("X")))),
        Formula::or(p.qp.clone(), Formula::guarded_box(Owner::One, v("X"))),
    )
}

/// `νX. ¬T ∧ (Q_1 ∨ ◇X) ∧ (Q_P ∨ (Q_1 ∧ □X))`.
pub fn vp_sure_complement_formula(sys: &VassMdp, targets: &[StateId]) -> Formula {
    Formula::nu("X", avoid_step(&parts(sys, targets)))
}

/// `μY. νX. (¬T ∧ (Q_1 ∨ ◇X) ∧ (Q_P ∨ (Q_1 ∧ □X))) ∨ (T ∧ Q_P ∧ ◇Y) ∨ (T ∧ Q_1 ∧ □Y)`.
pub fn wp_sure_complement_formula(sys: &VassMdp, targets: &[StateId]) -> Formula {
    let p = parts(sys, targets);
    let leave_env = Formula::and(Formula::and(p.t.clone(), p.qp.clone()), Formula::diamond(v("Y")));
    let leave_ctrl = Formula::and(p.t.clone(), Formula::guarded_box(Owner::One, v("Y")));
    Formula::mu("Y", Formula::nu("X", or3(avoid_step(&p), leave_env, leave_ctrl)))
}

fn require_one_vass(sys: &VassMdp) -> Result<(), MucalcError> {
    if sys.classify().is_one_vass {
        Ok(())
    } else {
        Err(MucalcError::WrongSubclass("1-VASS-MDP"))
    }
}

fn require_df_p_vass(sys: &VassMdp) -> Result<(), MucalcError> {
    let c = sys.classify();
    if !c.is_p_vass {
        Err(MucalcError::WrongSubclass("P-VASS-MDP"))
    } else if !c.deadlock_free_all_configs {
        Err(MucalcError::NotDeadlockFree)
    } else {
        Ok(())
    }
}

fn run(sys: &VassMdp, f: Formula, opts: &EvalOptions) -> Result<Evaluation, MucalcError> {
    eval(sys, &f, &Env::new(), opts)
}

/// Configurations with a strategy surely reaching `targets`.
pub fn v1_sure(sys: &VassMdp, targets: &[StateId], opts: &EvalOptions) -> Result<Evaluation, MucalcError> {
    require_one_vass(sys)?;
    run(sys, v1_sure_formula(sys, targets), opts)
}

/// Configurations with a strategy surely visiting `targets` infinitely often.
pub fn w1_sure(sys: &VassMdp, targets: &[StateId], opts: &EvalOptions) -> Result<Evaluation, MucalcError> {
    require_one_vass(sys)?;
    run(sys, w1_sure_formula(sys, targets), opts)
}

/// Configurations with a strategy reaching `targets` with probability 1.
pub fn v1_as(sys: &VassMdp, targets: &[StateId], opts: &EvalOptions) -> Result<Evaluation, MucalcError> {
    require_one_vass(sys)?;
    run(sys, v1_as_formula(sys, targets), opts)
}

/// Configurations with a strategy visiting `targets` infinitely often with probability 1.
pub fn w1_as(sys: &VassMdp, targets: &[StateId], opts: &EvalOptions) -> Result<Evaluation, MucalcError> {
    require_one_vass(sys)?;
    run(sys, w1_as_formula(sys, targets), opts)
}

/// Configurations from which no strategy surely reaches `targets`.
pub fn vp_sure_complement(
    sys: &VassMdp,
    targets: &[StateId],
    opts: &EvalOptions,
) -> Result<Evaluation, MucalcError> {
    require_df_p_vass(sys)?;
    run(sys, vp_sure_complement_formula(sys, targets), opts)
}

/// Configurations from which no strategy surely visits `targets` infinitely often.
pub fn wp_sure_complement(
    sys: &VassMdp,
    targets: &[StateId],
    opts: &EvalOptions,
) -> Result<Evaluation, MucalcError> {
    require_df_p_vass(sys)?;
    run(sys, wp_sure_complement_formula(sys, targets), opts)
}
