//! Memoryless controller strategies read off least-fixpoint stages.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::Ratio;

use crate::model::{Config, CounterVec, Owner, StateId, TransId, VassMdp};
use crate::upset::UpwardClosedSet;

use super::MucalcError;

/// Moves each controller configuration of stage `F_j` (`j ≥ 2`) into `F_{j−1}`.
#[derive(Clone, Debug)]
pub struct RegionStrategy {
    stages: Vec<UpwardClosedSet>,
    table: BTreeMap<(StateId, usize), Vec<TransId>>,
}

/// Build the rank-decreasing strategy of a least-fixpoint stage sequence.
///
/// Generators of target states need no witness; any other controller
/// generator without one is reported as [`MucalcError::NoWitness`].
pub fn extract_strategy(
    sys: &VassMdp,
    stages: &[UpwardClosedSet],
    targets: &[StateId],
) -> Result<RegionStrategy, MucalcError> {
    let mut table: BTreeMap<(StateId, usize), Vec<TransId>> = BTreeMap::new();
    for j in 2..stages.len() {
        let (cur, prev) = (&stages[j], &stages[j - 1]);
        for (q, g) in cur.iter() {
            let c = Config::new(q, g.clone());
            if sys.owner(q) != Owner::One || prev.contains(&c) {
                continue;
            }
            let witness = sys
                .enabled(&c)
                .into_iter()
                .find(|t| sys.step(&c, t).map(|s| prev.contains(&s)).unwrap_or(false));
            match witness {
                Some(t) => {
                    let e = table.entry((q, j)).or_default();
                    if !e.contains(&t.id) {
                        e.push(t.id);
                    }
                }
                None if targets.contains(&q) => {}
                None => {
                    return Err(MucalcError::NoWitness {
                        state: sys.name(q).to_string(),
                        rank: j,
                    })
                }
            }
        }
    }
    Ok(RegionStrategy {
        stages: stages.to_vec(),
        table,
    })
}

impl RegionStrategy {
    /// Least `j ≥ 1` with `c ∈ F_j`.
    pub fn rank(&self, c: &Config) -> Option<usize> {
        (1..self.stages.len()).find(|&j| self.stages[j].contains(c))
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len().saturating_sub(1)
    }

    /// The final stage, i.e. the set the strategy is defined for.
    pub fn region(&self) -> &UpwardClosedSet {
        self.stages.last().expect("stage sequence starts with the empty set")
    }

    /// The controller's move at `c`; `None` at probabilistic or deadlocked
    /// configurations.
    pub fn choose(&self, sys: &VassMdp, c: &Config) -> Option<TransId> {
        if sys.owner(c.state) != Owner::One {
            return None;
        }
        let enabled = sys.enabled(c);
        let first = enabled.first()?.id;
        let Some(j) = self.rank(c).filter(|&j| j >= 2) else {
            return Some(first);
        };
        let prev = &self.stages[j - 1];
        let preferred = self.table.get(&(c.state, j)).into_iter().flatten();
        let all = enabled.iter().map(|t| &t.id);
        preferred
            .chain(all)
            .find(|&&t| {
                enabled.iter().any(|e| e.id == t)
                    && prev.contains(&sys.step(c, sys.transition(t)).expect("enabled"))
            })
            .copied()
            .or(Some(first))
    }

    /// `state rank -> transition-id` lines with the generator that needed it.
    pub fn table_text(&self, sys: &VassMdp) -> String {
        let mut out = String::new();
        for ((q, j), ts) in &self.table {
            for t in ts {
                writeln!(out, "{} {} -> {}", sys.name(*q), j, sys.transition(*t).name).unwrap();
            }
        }
        out
    }

    /// Stage membership listing, one `F_j` block per stage.
    pub fn stages_text(&self, sys: &VassMdp) -> String {
        let mut out = String::new();
        for (j, s) in self.stages.iter().enumerate().skip(1) {
            writeln!(out, "F_{j}").unwrap();
            for (q, g) in s.iter() {
                writeln!(out, "  {} {}", sys.name(q), CounterVec(g.clone())).unwrap();
            }
        }
        out
    }
}

/// `N`, the number of stages, and `β = min_q Min_q / (L_q · W_q)` over
/// probabilistic states with outgoing transitions, where `Min_q` is the
/// least outgoing weight, `L_q` the out-degree and `W_q` the total weight.
/// From any member of the last stage the strategy reaches the first stage
/// within `N` steps with probability at least `β^N`.
pub fn step_bound_and_beta(sys: &VassMdp, stages: &[UpwardClosedSet]) -> (usize, Ratio<u64>) {
    let n = stages.len().saturating_sub(1);
    let beta = sys
        .owned_by(Owner::Prob)
        .filter_map(|q| {
            let ws: Vec<u64> = sys.outgoing(q).map(|t| t.weight).collect();
            let min = *ws.iter().min()?;
            Some(Ratio::new(min, ws.len() as u64 * ws.iter().sum::<u64>()))
        })
        .min()
        .unwrap_or_else(|| Ratio::from_integer(1));
    (n, beta)
}
