//! The single-sided μ-calculus over VASS configurations: formulas, fixpoint
//! evaluation, the winning-set characterizations and strategy extraction.

mod accel;
mod eval;
mod formula;
mod strategy;
mod winning;

use thiserror::Error;

use crate::model::ModelError;
use crate::upset::UpsetError;

pub use eval::{
    eval, AccelerationEvent, Env, EvalOptions, Evaluation, FixpointRecord, FixpointTrace,
    Membership, NuTermination,
};
pub use formula::{check_single_sided, parse_formula, Formula};
pub use strategy::{extract_strategy, step_bound_and_beta, RegionStrategy};
pub use winning::{
    v1_as, v1_as_formula, v1_sure, v1_sure_formula, vp_sure_complement,
    vp_sure_complement_formula, w1_as, w1_as_formula, w1_sure, w1_sure_formula,
    wp_sure_complement, wp_sure_complement_formula,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MucalcError {
    #[error("parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("free variable `{0}`")]
    FreeVariable(String),
    #[error("boxes are guarded by both players")]
    MixedGuards,
    #[error("guarded side is not zero-effect: transition `{0}` changes the counters")]
    NotSingleSided(String),
    #[error("formula requires a {0}")]
    WrongSubclass(&'static str),
    #[error("system is not deadlock-free")]
    NotDeadlockFree,
    #[error("no witness transition for state `{state}` at rank {rank}")]
    NoWitness { state: String, rank: usize },
    #[error(transparent)]
    Upset(#[from] UpsetError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
