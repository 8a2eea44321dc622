//! The six qualitative questions and their answers.

use std::fmt;
use std::str::FromStr;

use crate::model::{Config, StateId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantifier {
    Sure,
    AlmostSure,
    LimitSure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Objective {
    Reach,
    Buchi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Problem {
    pub quantifier: Quantifier,
    pub objective: Objective,
}

impl Problem {
    pub const fn new(quantifier: Quantifier, objective: Objective) -> Self {
        Problem {
            quantifier,
            objective,
        }
    }

    pub const ALL: [Problem; 6] = [
        Problem::new(Quantifier::Sure, Objective::Reach),
        Problem::new(Quantifier::AlmostSure, Objective::Reach),
        Problem::new(Quantifier::LimitSure, Objective::Reach),
        Problem::new(Quantifier::Sure, Objective::Buchi),
        Problem::new(Quantifier::AlmostSure, Objective::Buchi),
        Problem::new(Quantifier::LimitSure, Objective::Buchi),
    ];
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = match self.quantifier {
            Quantifier::Sure => "sure",
            Quantifier::AlmostSure => "as",
            Quantifier::LimitSure => "ls",
        };
        let o = match self.objective {
            Objective::Reach => "reach",
            Objective::Buchi => "buchi",
        };
        write!(f, "{q}-{o}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownProblem(pub String);

impl fmt::Display for UnknownProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown problem `{}`", self.0)
    }
}

impl std::error::Error for UnknownProblem {}

impl FromStr for Problem {
    type Err = UnknownProblem;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Problem::ALL
            .into_iter()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| UnknownProblem(s.to_string()))
    }
}

/// A question about one initial configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuerySpec {
    pub problem: Problem,
    pub init: Config,
    pub targets: Vec<StateId>,
}

/// Outcome of a decision procedure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
    Unknown(String),
    /// The problem is undecidable for the system's class; carries the theorem.
    UndecidableClass(u32),
    OpenProblem,
}

impl Answer {
    pub fn from_bool(b: bool) -> Answer {
        if b {
            Answer::Yes
        } else {
            Answer::No
        }
    }

    /// `Some(true)` for YES, `Some(false)` for NO.
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Answer::Yes => Some(true),
            Answer::No => Some(false),
            _ => None,
        }
    }

    /// Process exit code: 0 YES, 1 NO, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Answer::Yes => 0,
            Answer::No => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Yes => write!(f, "YES"),
            Answer::No => write!(f, "NO"),
            Answer::Unknown(r) => write!(f, "UNKNOWN({r})"),
            Answer::UndecidableClass(t) => write!(f, "UNDECIDABLE_CLASS(Theorem {t})"),
            Answer::OpenProblem => write!(f, "OPEN_PROBLEM"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_names_round_trip() {
        for p in Problem::ALL {
            assert_eq!(p.to_string().parse::<Problem>().unwrap(), p);
        }
        assert_eq!(
            "as-buchi".parse::<Problem>().unwrap(),
            Problem::new(Quantifier::AlmostSure, Objective::Buchi)
        );
        assert!("as-büchi".parse::<Problem>().is_err());
    }

    #[test]
    fn answer_codes() {
        assert_eq!(Answer::Yes.exit_code(), 0);
        assert_eq!(Answer::No.exit_code(), 1);
        assert_eq!(Answer::OpenProblem.exit_code(), 2);
        assert_eq!(Answer::UndecidableClass(3).to_string(), "UNDECIDABLE_CLASS(Theorem 3)");
    }
}
