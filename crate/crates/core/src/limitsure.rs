//! Dimension reduction for limit-sure reachability on 1-VASS-MDPs.
//!
//! [`reduce_once`] unfolds the configuration graph until each branch either
//! closes a cycle or strictly grows a counter over an ancestor. A grown
//! counter is then treated as unbounded: the branch continues in a coloured
//! copy of the system with that coordinate projected away. Iterating down
//! to dimension 0 leaves a finite MDP on which limit-sure and almost-sure
//! reachability coincide.
//!
//! Coordinates are numbered from 1 in this module's public API.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::finitemdp::{FiniteError, FiniteMdp};
use crate::model::{fresh_name, Config, ModelError, StateId, SystemBuilder, VassMdp};

/// A natural number or the unbounded value `*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtNat {
    Fin(u64),
    Star,
}

impl ExtNat {
    /// `*` absorbs every finite shift.
    pub fn shift(self, z: i64) -> Option<ExtNat> {
        match self {
            ExtNat::Star => Some(ExtNat::Star),
            ExtNat::Fin(v) => v.checked_add_signed(z).map(ExtNat::Fin),
        }
    }
}

impl PartialOrd for ExtNat {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtNat {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self, other) {
            (ExtNat::Star, ExtNat::Star) => Equal,
            (ExtNat::Star, ExtNat::Fin(_)) => Greater,
            (ExtNat::Fin(_), ExtNat::Star) => Less,
            (ExtNat::Fin(a), ExtNat::Fin(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(v) => write!(f, "{v}"),
            ExtNat::Star => write!(f, "*"),
        }
    }
}

/// Counter vector over `ℕ ∪ {*}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExtCounterVec(pub Vec<ExtNat>);

impl ExtCounterVec {
    pub fn finite(v: &[u64]) -> Self {
        ExtCounterVec(v.iter().map(|&x| ExtNat::Fin(x)).collect())
    }

    /// Replace coordinate `k` (1-based) by `*`.
    pub fn star(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.0[k - 1] = ExtNat::Star;
        out
    }
}

impl fmt::Display for ExtCounterVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

/// The index set `I` (1-based) on which `c2` strictly exceeds `c1`, when
/// both share a state, `c2` is nowhere smaller, and `I` is nonempty.
pub fn strictly_dominates(
    c1: (StateId, &ExtCounterVec),
    c2: (StateId, &ExtCounterVec),
) -> Option<Vec<usize>> {
    assert_eq!(c1.1 .0.len(), c2.1 .0.len(), "vectors of equal length");
    if c1.0 != c2.0 {
        return None;
    }
    let mut idx = Vec::new();
    for (i, (a, b)) in c1.1 .0.iter().zip(&c2.1 .0).enumerate() {
        match a.cmp(b) {
            std::cmp::Ordering::Less => idx.push(i + 1),
            std::cmp::Ordering::Equal => {}
            std::cmp::Ordering::Greater => return None,
        }
    }
    (!idx.is_empty()).then_some(idx)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LimitSureError {
    #[error("limit-sure reduction needs a 1-VASS-MDP: probabilistic transition `{0}` changes the counters")]
    WrongSubclass(String),
    #[error("dimension 0 needs no reduction; solve the finite MDP directly")]
    DimensionZero,
    #[error("coordinate {k} out of range for dimension {dim}")]
    BadCoordinate { k: usize, dim: usize },
    #[error("exploration exceeded {0} nodes")]
    SafetyCap(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Finite(#[from] FiniteError),
}

/// Upper bound on nodes per reduction step.
pub const NODE_CAP: usize = 100_000;

fn project(v: &[i64], k: usize) -> Vec<i64> {
    v.iter()
        .enumerate()
        .filter(|&(i, _)| i + 1 != k)
        .map(|(_, &x)| x)
        .collect()
}

/// Add the colour-`color` copy of every state of `sys`, with coordinate `k`
/// removed from all effects. Transitions that coincide after projection are
/// merged and their weights summed. Returns the copy of each state.
fn add_projection(
    b: &mut SystemBuilder,
    sys: &VassMdp,
    k: usize,
    color: usize,
) -> Result<Vec<StateId>, ModelError> {
    let mut map = Vec::with_capacity(sys.num_states());
    for q in sys.state_ids() {
        let name = fresh_name(&format!("c{color}_{}", sys.name(q)), |n| b.lookup(n).is_some());
        map.push(b.state(&name, sys.owner(q))?);
    }
    let mut merged: Vec<(String, StateId, Vec<i64>, StateId, u64)> = Vec::new();
    let mut slot: HashMap<(StateId, Vec<i64>, StateId), usize> = HashMap::new();
    for t in sys.transitions() {
        let eff = project(&t.effect.0, k);
        let key = (map[t.source.0], eff.clone(), map[t.target.0]);
        match slot.get(&key) {
            Some(&i) => merged[i].4 += t.weight,
            None => {
                slot.insert(key.clone(), merged.len());
                merged.push((t.name.clone(), key.0, eff, key.2, t.weight));
            }
        }
    }
    for (name, s, eff, d, w) in merged {
        let name = fresh_name(&format!("c{color}_{name}"), |n| b.has_transition(n));
        b.transition(&name, s, eff, d, w)?;
    }
    Ok(map)
}

/// The colour-`color` copy of `sys` with coordinate `k` (1-based) projected away.
pub fn colored_projection(sys: &VassMdp, k: usize, color: usize) -> Result<VassMdp, LimitSureError> {
    if k == 0 || k > sys.dim() {
        return Err(LimitSureError::BadCoordinate { k, dim: sys.dim() });
    }
    let mut b = SystemBuilder::new(sys.dim() - 1);
    add_projection(&mut b, sys, k, color)?;
    Ok(b.build())
}

/// One node of the exploration tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionNode {
    /// State of the reduced system.
    pub id: StateId,
    /// State of the input system named by the label.
    pub state: StateId,
    pub counters: ExtCounterVec,
    pub parent: Option<usize>,
    /// Set on colour entries: `(colour, projected coordinate)`.
    pub color: Option<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub system: VassMdp,
    pub init: Config,
    pub targets: Vec<StateId>,
    pub color_count: usize,
    pub trace: Vec<ReductionNode>,
}

impl ReducedSystem {
    /// One `node λ=(state,[..])` line per tree node, colour entries last on
    /// their branch.
    pub fn trace_text(&self, original: &VassMdp) -> String {
        let mut out = String::new();
        for n in &self.trace {
            let state = match n.color {
                Some((c, _)) => format!("c{c}_{}", original.name(n.state)),
                None => original.name(n.state).to_string(),
            };
            out.push_str(&format!(
                "{} λ=({},{})",
                self.system.name(n.id),
                state,
                n.counters
            ));
            if let Some(p) = n.parent {
                out.push_str(&format!(" parent={}", self.system.name(self.trace[p].id)));
            }
            out.push('\n');
        }
        out
    }
}

fn check_one_vass(sys: &VassMdp) -> Result<(), LimitSureError> {
    match sys.first_effectful_prob_transition() {
        Some(t) => Err(LimitSureError::WrongSubclass(t.name.clone())),
        None => Ok(()),
    }
}

/// One step of the reduction: an equivalent system of dimension `d − 1`.
pub fn reduce_once(
    sys: &VassMdp,
    init: &Config,
    targets: &[StateId],
) -> Result<ReducedSystem, LimitSureError> {
    check_one_vass(sys)?;
    if sys.dim() == 0 {
        return Err(LimitSureError::DimensionZero);
    }
    sys.check_config(init)?;
    let d = sys.dim();
    let zero = vec![0i64; d - 1];
    let mut b = SystemBuilder::new(d - 1);
    let mut new_targets = Vec::new();
    let mut trace: Vec<ReductionNode> = Vec::new();
    let mut counts: Vec<Vec<u64>> = Vec::new();
    let mut color = 0usize;

    let make_node = |b: &mut SystemBuilder,
                         trace: &mut Vec<ReductionNode>,
                         counts: &mut Vec<Vec<u64>>,
                         new_targets: &mut Vec<StateId>,
                         q: StateId,
                         v: Vec<u64>,
                         parent: Option<usize>,
                         index: usize|
     -> Result<usize, LimitSureError> {
        if trace.len() >= NODE_CAP {
            return Err(LimitSureError::SafetyCap(NODE_CAP));
        }
        let name = fresh_name(&format!("n{index}"), |n| b.lookup(n).is_some());
        let id = b.state(&name, sys.owner(q))?;
        if targets.contains(&q) {
            new_targets.push(id);
        }
        trace.push(ReductionNode {
            id,
            state: q,
            counters: ExtCounterVec::finite(&v),
            parent,
            color: None,
        });
        counts.push(v);
        Ok(trace.len() - 1)
    };

    let root = make_node(
        &mut b,
        &mut trace,
        &mut counts,
        &mut new_targets,
        init.state,
        init.counters.0.clone(),
        None,
        0,
    )?;
    let mut queue = VecDeque::from([root]);
    while let Some(n) = queue.pop_front() {
        let q = trace[n].state;
        let v = counts[n].clone();
        let label = trace[n].counters.clone();

        // Deepest proper ancestor that the node strictly dominates.
        let mut dominated = None;
        let mut a = trace[n].parent;
        while let Some(m) = a {
            if let Some(idx) = strictly_dominates((trace[m].state, &trace[m].counters), (q, &label)) {
                dominated = Some(idx[0]);
                break;
            }
            a = trace[m].parent;
        }
        if let Some(k) = dominated {
            color += 1;
            let map = add_projection(&mut b, sys, k, color)?;
            for &x in targets {
                new_targets.push(map[x.0]);
            }
            let entry = map[q.0];
            let bridge: Vec<i64> = project(&v.iter().map(|&x| x as i64).collect::<Vec<_>>(), k);
            let name = fresh_name(&format!("{}_to_c{color}", b_name(&b, trace[n].id)), |s| {
                b.has_transition(s)
            });
            b.transition(&name, trace[n].id, bridge, entry, 1)?;
            trace.push(ReductionNode {
                id: entry,
                state: q,
                counters: label.star(k),
                parent: Some(n),
                color: Some((color, k)),
            });
            counts.push(Vec::new());
            continue;
        }

        let c = Config::new(q, v.clone());
        for t in sys.enabled(&c) {
            let s = sys.step(&c, t)?;
            // Ancestor-or-self with exactly this label closes a cycle.
            let mut back = None;
            let mut a = Some(n);
            while let Some(m) = a {
                if trace[m].state == s.state && counts[m] == s.counters.0 {
                    back = Some(m);
                    break;
                }
                a = trace[m].parent;
            }
            let dst = match back {
                Some(m) => m,
                None => {
                    let index = trace.len() - color;
                    let m = make_node(
                        &mut b,
                        &mut trace,
                        &mut counts,
                        &mut new_targets,
                        s.state,
                        s.counters.0.clone(),
                        Some(n),
                        index,
                    )?;
                    queue.push_back(m);
                    m
                }
            };
            let src_name = b_name(&b, trace[n].id);
            let name = fresh_name(&format!("{src_name}_{}", t.name), |x| b.has_transition(x));
            b.transition(&name, trace[n].id, zero.clone(), trace[dst].id, t.weight)?;
        }
    }

    new_targets.sort();
    new_targets.dedup();
    let init_id = trace[root].id;
    Ok(ReducedSystem {
        system: b.build(),
        init: Config::new(init_id, vec![0; d - 1]),
        targets: new_targets,
        color_count: color,
        trace,
    })
}

fn b_name(b: &SystemBuilder, id: StateId) -> String {
    b.state_name(id).to_string()
}

/// Verdict of [`limit_sure_reach`] with every intermediate reduction.
#[derive(Clone, Debug)]
pub struct LimitSureOutcome {
    pub answer: bool,
    pub reductions: Vec<ReducedSystem>,
}

/// Decide limit-sure reachability by `d` reductions and an almost-sure
/// check on the final finite MDP.
pub fn limit_sure_reach(
    sys: &VassMdp,
    init: &Config,
    targets: &[StateId],
) -> Result<LimitSureOutcome, LimitSureError> {
    check_one_vass(sys)?;
    sys.check_config(init)?;
    let mut reductions: Vec<ReducedSystem> = Vec::new();
    for _ in 0..sys.dim() {
        let r = match reductions.last() {
            None => reduce_once(sys, init, targets)?,
            Some(prev) => reduce_once(&prev.system, &prev.init, &prev.targets)?,
        };
        reductions.push(r);
    }
    let (fin, start, ts) = match reductions.last() {
        None => (sys, init.state, targets),
        Some(r) => (&r.system, r.init.state, r.targets.as_slice()),
    };
    let mdp = FiniteMdp::from_system(fin, ts)?;
    Ok(LimitSureOutcome {
        answer: mdp.as_reach(start.0),
        reductions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::gen_gadget;
    use crate::model::Owner;

    fn ext(v: &[u64]) -> ExtCounterVec {
        ExtCounterVec::finite(v)
    }

    #[test]
    fn domination_examples() {
        let q = StateId(0);
        assert_eq!(strictly_dominates((q, &ext(&[1, 0])), (q, &ext(&[2, 0]))), Some(vec![1]));
        assert_eq!(strictly_dominates((q, &ext(&[1, 0])), (q, &ext(&[2, 1]))), Some(vec![1, 2]));
        assert_eq!(strictly_dominates((q, &ext(&[1, 2])), (q, &ext(&[2, 1]))), None);
        assert_eq!(strictly_dominates((q, &ext(&[1, 2])), (q, &ext(&[1, 2]))), None);
        assert_eq!(strictly_dominates((q, &ext(&[1])), (StateId(1), &ext(&[2]))), None);
        let s = ext(&[1, 3]).star(1);
        assert_eq!(strictly_dominates((q, &s), (q, &ext(&[4, 4]).star(1))), Some(vec![2]));
        assert_eq!(ExtNat::Star.shift(-5), Some(ExtNat::Star));
        assert!(ExtNat::Fin(1_000_000) < ExtNat::Star);
    }

    #[test]
    fn projection_merges_weights() {
        let mut b = SystemBuilder::new(2);
        let q = b.state("q", Owner::Prob).unwrap();
        let q2 = b.state("q2", Owner::One).unwrap();
        b.transition("t1", q, vec![0, 1], q2, 1).unwrap();
        b.transition("t2", q, vec![3, 1], q2, 2).unwrap();
        b.transition("u", q2, vec![-1, 2], q, 1).unwrap();
        let sys = b.build();
        let p = colored_projection(&sys, 1, 4).unwrap();
        assert_eq!(p.dim(), 1);
        assert_eq!(p.num_states(), 2);
        let ts = p.transitions();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts[0].effect.0, vec![1]);
        assert_eq!(ts[0].weight, 3);
        assert_eq!(p.name(ts[0].source), "c4_q");
        assert_eq!(ts[1].effect.0, vec![2]);
        assert_eq!(p.owner(p.lookup("c4_q").unwrap()), Owner::Prob);
        assert_eq!(p.owner(p.lookup("c4_q2").unwrap()), Owner::One);
        assert!(colored_projection(&sys, 3, 1).is_err());
    }

    #[test]
    fn pump_reduces_with_one_color() {
        let g = gen_gadget("FIX-PUMP").unwrap();
        let r = reduce_once(&g.system, &g.init, &g.targets).unwrap();
        assert_eq!(r.system.dim(), 0);
        assert_eq!(r.color_count, 1);
        let pay = r.system.lookup("c1_t").unwrap();
        let c = Config::new(pay, vec![]);
        assert_eq!(r.system.enabled(&c).len(), 1, "decrement is always enabled");
        let entry = r.trace.iter().find(|n| n.color.is_some()).unwrap();
        assert_eq!(r.trace[entry.parent.unwrap()].counters, ext(&[1]));
        assert_eq!(entry.counters.to_string(), "[*]");

        let out = limit_sure_reach(&g.system, &g.init, &g.targets).unwrap();
        assert!(out.answer);
        assert_eq!(out.reductions.len(), 1);
    }

    #[test]
    fn dec_is_not_limit_sure() {
        let g = gen_gadget("FIX-DEC").unwrap();
        let out = limit_sure_reach(&g.system, &g.init, &g.targets).unwrap();
        assert!(!out.answer);
        let one = Config::new(g.init.state, vec![1]);
        assert!(limit_sure_reach(&g.system, &one, &g.targets).unwrap().answer);
    }

    #[test]
    fn coin_is_limit_sure() {
        let g = gen_gadget("FIX-COIN").unwrap();
        let out = limit_sure_reach(&g.system, &g.init, &g.targets).unwrap();
        assert!(out.answer);
        assert_eq!(out.reductions[0].color_count, 0);
    }

    #[test]
    fn self_loop_gives_back_edge() {
        let mut b = SystemBuilder::new(1);
        let q = b.state("q", Owner::One).unwrap();
        b.transition("l", q, vec![0], q, 1).unwrap();
        let sys = b.build();
        let r = reduce_once(&sys, &Config::new(q, vec![2]), &[q]).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.color_count, 0);
        let t = &r.system.transitions()[0];
        assert_eq!((t.source, t.target), (r.init.state, r.init.state));
        assert_eq!(r.targets, vec![r.init.state]);
    }

    #[test]
    fn rejects_bad_input() {
        let mut b = SystemBuilder::new(1);
        let p = b.state("p", Owner::Prob).unwrap();
        b.transition("x", p, vec![1], p, 1).unwrap();
        let sys = b.build();
        let c = Config::new(p, vec![0]);
        assert!(matches!(reduce_once(&sys, &c, &[]), Err(LimitSureError::WrongSubclass(_))));
        let mut b = SystemBuilder::new(0);
        let q = b.state("q", Owner::One).unwrap();
        let sys = b.build();
        let c = Config::new(q, vec![]);
        assert_eq!(reduce_once(&sys, &c, &[]).unwrap_err(), LimitSureError::DimensionZero);
        assert!(!limit_sure_reach(&sys, &c, &[]).unwrap().answer);
    }
}
