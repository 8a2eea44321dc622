//! Exact qualitative solvers for explicit finite MDPs, and the bounded
//! oracle that unfolds a VASS-MDP into one.
//!
//! Solvers evaluate the same fixpoint shapes as the symbolic engine, over
//! node sets. Deadlocked plays are maximal: they satisfy reachability iff
//! a target occurred and never satisfy Büchi.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::model::{Config, Owner, StateId, VassMdp};
use crate::query::{Objective, Problem, Quantifier};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FiniteMdp {
    owners: Vec<Owner>,
    targets: Vec<bool>,
    edges: Vec<Vec<(usize, u64)>>,
}

type Set = Vec<bool>;

impl FiniteMdp {
    pub fn new() -> Self {
        FiniteMdp::default()
    }

    pub fn add_node(&mut self, owner: Owner, target: bool) -> usize {
        self.owners.push(owner);
        self.targets.push(target);
        self.edges.push(Vec::new());
        self.owners.len() - 1
    }

    /// Add a weighted edge; parallel edges are allowed.
    pub fn add_edge(&mut self, from: usize, to: usize, weight: u64) {
        assert!(weight > 0, "edge weights are positive");
        self.edges[from].push((to, weight));
    }

    pub fn num_nodes(&self) -> usize {
        self.owners.len()
    }

    pub fn owner(&self, n: usize) -> Owner {
        self.owners[n]
    }

    pub fn is_target(&self, n: usize) -> bool {
        self.targets[n]
    }

    pub fn edges(&self, n: usize) -> &[(usize, u64)] {
        &self.edges[n]
    }

    /// The finite MDP of a dimension-0 system.
    pub fn from_system(sys: &VassMdp, targets: &[StateId]) -> Result<Self, FiniteError> {
        if sys.dim() != 0 {
            return Err(FiniteError::NotDimensionZero(sys.dim()));
        }
        let mut m = FiniteMdp::new();
        for q in sys.state_ids() {
            m.add_node(sys.owner(q), targets.contains(&q));
        }
        for t in sys.transitions() {
            m.add_edge(t.source.0, t.target.0, t.weight);
        }
        Ok(m)
    }

    fn all(&self, v: bool) -> Set {
        vec![v; self.num_nodes()]
    }

    fn of_owner(&self, o: Owner) -> Set {
        self.owners.iter().map(|&x| x == o).collect()
    }

    fn pre_exists(&self, x: &Set) -> Set {
        self.edges.iter().map(|es| es.iter().any(|&(m, _)| x[m])).collect()
    }

    /// Nodes with at least one successor, all of them in `x`.
    fn pre_all_live(&self, x: &Set) -> Set {
        self.edges
            .iter()
            .map(|es| !es.is_empty() && es.iter().all(|&(m, _)| x[m]))
            .collect()
    }

    fn lfp(&self, f: impl Fn(&Set) -> Set) -> Set {
        let mut y = self.all(false);
        loop {
            let n = f(&y);
            if n == y {
                return y;
            }
            y = n;
        }
    }

    fn gfp(&self, f: impl Fn(&Set) -> Set) -> Set {
        let mut x = self.all(true);
        loop {
            let n = f(&x);
            if n == x {
                return x;
            }
            x = n;
        }
    }

    /// `(Q_1 ∧ ◇(X ∧ Y)) ∨ (Q_P ∧ ◇Y ∧ □X)`.
    fn inv_pre(&self, x: &Set, y: &Set) -> Set {
        let q1 = self.of_owner(Owner::One);
        let xy = and(x, y);
        let ctrl = and(&q1, &self.pre_exists(&xy));
        let env = and(
            &and(&self.of_owner(Owner::Prob), &self.pre_exists(y)),
            &self.pre_all_live(x),
        );
        or(&ctrl, &env)
    }

    /// `Q_1 ∧ ◇X ∨ Q_P ∧ ◇⊤ ∧ □X`.
    fn cpre(&self, x: &Set) -> Set {
        let q1 = self.of_owner(Owner::One);
        let qp = self.of_owner(Owner::Prob);
        or(
            &and(&q1, &self.pre_exists(x)),
            &and(&qp, &self.pre_all_live(x)),
        )
    }

    pub fn sure_reach_set(&self) -> Set {
        self.lfp(|x| or(&self.targets, &self.cpre(x)))
    }

    pub fn as_reach_set(&self) -> Set {
        self.gfp(|x| self.lfp(|y| or(&self.targets, &self.inv_pre(x, y))))
    }

    pub fn sure_buchi_set(&self) -> Set {
        let not_t: Set = self.targets.iter().map(|t| !t).collect();
        self.gfp(|y| {
            let stay = or(&not_t, &self.cpre(y));
            self.lfp(|x| and(&or(&self.targets, &self.cpre(x)), &stay))
        })
    }

    pub fn as_buchi_set(&self) -> Set {
        self.gfp(|x| {
            let reach = self.lfp(|y| or(&self.targets, &self.inv_pre(x, y)));
            self.inv_pre(x, &reach)
        })
    }

    pub fn sure_reach(&self, from: usize) -> bool {
        self.sure_reach_set()[from]
    }

    pub fn as_reach(&self, from: usize) -> bool {
        self.as_reach_set()[from]
    }

    pub fn sure_buchi(&self, from: usize) -> bool {
        self.sure_buchi_set()[from]
    }

    pub fn as_buchi(&self, from: usize) -> bool {
        self.as_buchi_set()[from]
    }

    /// Limit-sure and almost-sure coincide on finite MDPs.
    pub fn solve(&self, problem: Problem, from: usize) -> bool {
        match (problem.quantifier, problem.objective) {
            (Quantifier::Sure, Objective::Reach) => self.sure_reach(from),
            (_, Objective::Reach) => self.as_reach(from),
            (Quantifier::Sure, Objective::Buchi) => self.sure_buchi(from),
            (_, Objective::Buchi) => self.as_buchi(from),
        }
    }
}

fn and(a: &Set, b: &Set) -> Set {
    a.iter().zip(b).map(|(x, y)| *x && *y).collect()
}

fn or(a: &Set, b: &Set) -> Set {
    a.iter().zip(b).map(|(x, y)| *x || *y).collect()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FiniteError {
    #[error("expected a dimension-0 system, found dimension {0}")]
    NotDimensionZero(usize),
    #[error("reachable configuration {0} exceeds the cap")]
    CapNotClosed(String),
    #[error("more than {0} reachable configurations")]
    TooLarge(usize),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Explicit reachable configuration graph of a VASS-MDP.
#[derive(Clone, Debug)]
pub struct Unfolding {
    pub mdp: FiniteMdp,
    pub configs: Vec<Config>,
    pub index: BTreeMap<Config, usize>,
}

const UNFOLD_LIMIT: usize = 200_000;

/// Unfold from `init`, refusing if any reachable counter exceeds `cap`.
/// With `stop_at_targets`, target configurations are not expanded.
pub fn unfold(
    sys: &VassMdp,
    init: &Config,
    targets: &[StateId],
    cap: u64,
    stop_at_targets: bool,
) -> Result<Unfolding, FiniteError> {
    sys.check_config(init)?;
    let mut u = Unfolding {
        mdp: FiniteMdp::new(),
        configs: Vec::new(),
        index: BTreeMap::new(),
    };
    let mut queue = VecDeque::new();
    let intern = |c: Config, u: &mut Unfolding, queue: &mut VecDeque<usize>| {
        if let Some(&n) = u.index.get(&c) {
            return Ok(n);
        }
        if c.counters.0.iter().any(|&v| v > cap) {
            let shown = format!("({}, {})", sys.name(c.state), c.counters);
            return Err(FiniteError::CapNotClosed(shown));
        }
        if u.configs.len() >= UNFOLD_LIMIT {
            return Err(FiniteError::TooLarge(UNFOLD_LIMIT));
        }
        let n = u.mdp.add_node(sys.owner(c.state), targets.contains(&c.state));
        u.configs.push(c.clone());
        u.index.insert(c, n);
        queue.push_back(n);
        Ok(n)
    };
    intern(init.clone(), &mut u, &mut queue)?;
    while let Some(n) = queue.pop_front() {
        if stop_at_targets && u.mdp.is_target(n) {
            continue;
        }
        let c = u.configs[n].clone();
        for t in sys.enabled(&c) {
            let s = sys.step(&c, t)?;
            let m = intern(s, &mut u, &mut queue)?;
            u.mdp.add_edge(n, m, t.weight);
        }
    }
    Ok(u)
}

/// Exact answer on the explicit unfolding, for cap-closed instances only.
pub fn bounded_oracle(
    sys: &VassMdp,
    cap: u64,
    problem: Problem,
    init: &Config,
    targets: &[StateId],
) -> Result<bool, FiniteError> {
    let stop = problem.objective == Objective::Reach;
    let u = unfold(sys, init, targets, cap, stop)?;
    Ok(u.mdp.solve(problem, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::gen_gadget;
    use crate::model::SystemBuilder;

    fn coin() -> FiniteMdp {
        let mut m = FiniteMdp::new();
        let c = m.add_node(Owner::Prob, false);
        let f = m.add_node(Owner::One, true);
        m.add_edge(c, f, 1);
        m.add_edge(c, c, 1);
        m.add_edge(f, f, 1);
        m
    }

    #[test]
    fn coin_answers() {
        let m = coin();
        assert!(m.as_reach(0));
        assert!(!m.sure_reach(0));
        assert!(!m.sure_buchi(0));
        assert!(m.as_buchi(0));
        assert!(m.sure_reach(1) && m.sure_buchi(1) && m.as_buchi(1) && m.as_reach(1));
    }

    #[test]
    fn self_loop_is_losing() {
        let mut m = FiniteMdp::new();
        let a = m.add_node(Owner::One, false);
        m.add_edge(a, a, 1);
        assert!(!m.as_reach(a) && !m.sure_reach(a));
    }

    #[test]
    fn chain_to_target() {
        let mut m = FiniteMdp::new();
        let a = m.add_node(Owner::One, false);
        let f = m.add_node(Owner::One, true);
        m.add_edge(a, f, 1);
        assert!(m.sure_reach(a));
        assert!(!m.sure_buchi(a), "deadlocked target");
        m.add_edge(f, f, 1);
        assert!(m.sure_buchi(a));
    }

    #[test]
    fn oracle_on_gadgets() {
        let g = gen_gadget("FIX-DEC").unwrap();
        for p in Problem::ALL {
            assert!(!bounded_oracle(&g.system, 2, p, &g.init, &g.targets).unwrap());
        }
        let one = Config::new(g.init.state, vec![1]);
        for p in Problem::ALL {
            assert!(bounded_oracle(&g.system, 2, p, &one, &g.targets).unwrap());
        }
        let pump = gen_gadget("FIX-PUMP").unwrap();
        let p = "as-reach".parse().unwrap();
        assert!(matches!(
            bounded_oracle(&pump.system, 5, p, &pump.init, &pump.targets),
            Err(FiniteError::CapNotClosed(_))
        ));
    }

    #[test]
    fn pump_without_pumping() {
        let g = gen_gadget("FIX-PUMP").unwrap();
        let mut b = SystemBuilder::new(1);
        for s in g.system.states() {
            b.state(&s.name, s.owner).unwrap();
        }
        for t in g.system.transitions().iter().filter(|t| t.name != "pump") {
            b.transition(&t.name, t.source, t.effect.0.clone(), t.target, t.weight)
                .unwrap();
        }
        let sys = b.build();
        let p3 = Config::new(sys.lookup("p").unwrap(), vec![3]);
        let u = unfold(&sys, &p3, &g.targets, 4, true).unwrap();
        // p, t and f at each of the levels 3, 2, 1, 0.
        assert_eq!(u.configs.len(), 12);
        let as_reach = "as-reach".parse().unwrap();
        assert!(!bounded_oracle(&sys, 4, as_reach, &p3, &g.targets).unwrap());
    }

    #[test]
    fn dimension_zero_import() {
        let mut b = SystemBuilder::new(0);
        let c = b.state("c", Owner::Prob).unwrap();
        let f = b.state("f", Owner::One).unwrap();
        b.transition("win", c, vec![], f, 1).unwrap();
        b.transition("again", c, vec![], c, 1).unwrap();
        let m = FiniteMdp::from_system(&b.build(), &[f]).unwrap();
        assert!(m.as_reach(c.0));
        let one = gen_gadget("FIX-COIN").unwrap().system;
        assert!(matches!(
            FiniteMdp::from_system(&one, &[]),
            Err(FiniteError::NotDimensionZero(1))
        ));
    }
}
