//! Qualitative verification of VASS Markov decision processes.

pub mod model;
pub mod upset;
pub mod mucalc;
pub mod query;
pub mod encoders;
pub mod finitemdp;
pub mod limitsure;
pub mod text;
pub mod sim;
pub mod check;
