//! Upward-closed subsets of `Q × ℕ^d`, represented per control state by the
//! antichain of their minimal elements.
//!
//! The algorithms are written once over [`VecOrder`] so the same code runs on
//! concrete counter vectors and on the affine generators used to verify
//! fixpoint acceleration (see `mucalc::accel`).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::{Config, Owner, StateId, TransId, Transition, VassMdp};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UpsetError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("transition `{0}` from the guarded side changes the counters")]
    NotZeroEffectSide(String),
    #[error("system is not a 1-VASS-MDP: probabilistic transition `{0}` changes the counters")]
    NotOneVass(String),
    #[error("transition #{0} does not belong to the system")]
    ForeignTransition(usize),
}

/// The order and lattice operations a generator type must provide.
pub(crate) trait VecOrder {
    type V: Clone + Ord + fmt::Debug;

    fn leq(&self, a: &Self::V, b: &Self::V) -> bool;
    fn join(&self, a: &Self::V, b: &Self::V) -> Self::V;
    /// Minimal `v` with `v + effect ≥ b` and `v ≥ 0`, i.e. `max(0, b − effect)`.
    fn pre(&self, b: &Self::V, effect: &[i64]) -> Self::V;
    fn zero(&self, dim: usize) -> Self::V;
}

/// Ordinary componentwise order on ℕ^d.
pub(crate) struct Natural;

impl VecOrder for Natural {
    type V = Vec<u64>;

    fn leq(&self, a: &Vec<u64>, b: &Vec<u64>) -> bool {
        a.iter().zip(b).all(|(x, y)| x <= y)
    }

    fn join(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
    }

    fn pre(&self, b: &Vec<u64>, effect: &[i64]) -> Vec<u64> {
        b.iter()
            .zip(effect)
            .map(|(&x, &z)| (x as i128 - z as i128).max(0) as u64)
            .collect()
    }

    fn zero(&self, dim: usize) -> Vec<u64> {
        vec![0; dim]
    }
}

/// Per-state antichains. Absent states contribute nothing; stored vectors are
/// sorted and minimal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Basis<V> {
    pub(crate) gens: BTreeMap<StateId, Vec<V>>,
}

impl<V> Default for Basis<V> {
    fn default() -> Self {
        Basis {
            gens: BTreeMap::new(),
        }
    }
}

pub(crate) fn minimize<O: VecOrder>(o: &O, mut v: Vec<O::V>) -> Vec<O::V> {
    v.sort();
    v.dedup();
    let keep: Vec<bool> = (0..v.len())
        .map(|i| !(0..v.len()).any(|j| j != i && o.leq(&v[j], &v[i])))
        .collect();
    v.into_iter()
        .zip(keep)
        .filter_map(|(x, k)| k.then_some(x))
        .collect()
}

impl<V: Clone + Ord + fmt::Debug> Basis<V> {
    pub(crate) fn from_raw<O: VecOrder<V = V>>(
        o: &O,
        raw: BTreeMap<StateId, Vec<V>>,
    ) -> Basis<V> {
        let gens = raw
            .into_iter()
            .filter_map(|(q, v)| {
                let m = minimize(o, v);
                (!m.is_empty()).then_some((q, m))
            })
            .collect();
        Basis { gens }
    }

    pub(crate) fn full<O: VecOrder<V = V>>(o: &O, sys: &VassMdp) -> Basis<V> {
        Basis {
            gens: sys.state_ids().map(|q| (q, vec![o.zero(sys.dim())])).collect(),
        }
    }

    pub(crate) fn atoms<O: VecOrder<V = V>>(
        o: &O,
        dim: usize,
        states: impl IntoIterator<Item = StateId>,
    ) -> Basis<V> {
        Basis {
            gens: states.into_iter().map(|q| (q, vec![o.zero(dim)])).collect(),
        }
    }

    pub(crate) fn get(&self, q: StateId) -> &[V] {
        self.gens.get(&q).map(Vec::as_slice).unwrap_or(&[])
    }

    pub(crate) fn contains<O: VecOrder<V = V>>(&self, o: &O, q: StateId, v: &V) -> bool {
        self.get(q).iter().any(|b| o.leq(b, v))
    }

    pub(crate) fn union<O: VecOrder<V = V>>(&self, o: &O, other: &Basis<V>) -> Basis<V> {
        let mut raw = self.gens.clone();
        for (q, v) in &other.gens {
            raw.entry(*q).or_default().extend(v.iter().cloned());
        }
        Basis::from_raw(o, raw)
    }

    pub(crate) fn intersect<O: VecOrder<V = V>>(&self, o: &O, other: &Basis<V>) -> Basis<V> {
        let mut raw = BTreeMap::new();
        for (q, a) in &self.gens {
            if let Some(b) = other.gens.get(q) {
                let joins = a
                    .iter()
                    .flat_map(|x| b.iter().map(move |y| (x, y)))
                    .map(|(x, y)| o.join(x, y))
                    .collect();
                raw.insert(*q, joins);
            }
        }
        Basis::from_raw(o, raw)
    }

    /// Restrict to the given states.
    pub(crate) fn restrict(&self, keep: impl Fn(StateId) -> bool) -> Basis<V> {
        Basis {
            gens: self
                .gens
                .iter()
                .filter(|(q, _)| keep(**q))
                .map(|(q, v)| (*q, v.clone()))
                .collect(),
        }
    }

    pub(crate) fn is_subset<O: VecOrder<V = V>>(&self, o: &O, other: &Basis<V>) -> bool {
        self.gens
            .iter()
            .all(|(q, v)| v.iter().all(|x| other.contains(o, *q, x)))
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub(crate) fn pre_exists<'a, O: VecOrder<V = V>>(
        &self,
        o: &O,
        trans: impl IntoIterator<Item = &'a Transition>,
    ) -> Basis<V> {
        let mut raw: BTreeMap<StateId, Vec<V>> = BTreeMap::new();
        for t in trans {
            for b in self.get(t.target) {
                raw.entry(t.source).or_default().push(o.pre(b, &t.effect.0));
            }
        }
        Basis::from_raw(o, raw)
    }

    /// `side ∧ □ self`. Caller guarantees `side` transitions are zero-effect.
    pub(crate) fn pre_forall_unchecked<O: VecOrder<V = V>>(
        &self,
        o: &O,
        sys: &VassMdp,
        side: Owner,
    ) -> Basis<V> {
        let mut raw = BTreeMap::new();
        'states: for q in sys.owned_by(side) {
            let mut succs: Vec<StateId> = sys.outgoing(q).map(|t| t.target).collect();
            succs.sort();
            succs.dedup();
            let mut acc = vec![o.zero(sys.dim())];
            for s in succs {
                let gens = self.get(s);
                if gens.is_empty() {
                    continue 'states;
                }
                let next = acc
                    .iter()
                    .flat_map(|a| gens.iter().map(move |b| o.join(a, b)))
                    .collect();
                acc = minimize(o, next);
            }
            raw.insert(q, acc);
        }
        Basis::from_raw(o, raw)
    }
}

pub(crate) fn check_zero_side(sys: &VassMdp, side: Owner) -> Result<(), UpsetError> {
    match sys
        .transitions()
        .iter()
        .find(|t| sys.owner(t.source) == side && !t.effect.is_zero())
    {
        Some(t) => Err(UpsetError::NotZeroEffectSide(t.name.clone())),
        None => Ok(()),
    }
}

/// An upward-closed set of configurations of a `dim`-dimensional system.
///
/// Equality is set equality: the per-state antichain basis is canonical.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UpwardClosedSet {
    dim: usize,
    pub(crate) basis: Basis<Vec<u64>>,
}

impl UpwardClosedSet {
    pub fn empty(dim: usize) -> Self {
        UpwardClosedSet {
            dim,
            basis: Basis::default(),
        }
    }

    /// All configurations of `sys`.
    pub fn full(sys: &VassMdp) -> Self {
        UpwardClosedSet {
            dim: sys.dim(),
            basis: Basis::full(&Natural, sys),
        }
    }

    /// `{q} × ℕ^d` for every listed state.
    pub fn atoms(dim: usize, states: impl IntoIterator<Item = StateId>) -> Self {
        UpwardClosedSet {
            dim,
            basis: Basis::atoms(&Natural, dim, states),
        }
    }

    /// Upward closure of the given points.
    pub fn from_generators(
        dim: usize,
        gens: impl IntoIterator<Item = (StateId, Vec<u64>)>,
    ) -> Result<Self, UpsetError> {
        let mut raw: BTreeMap<StateId, Vec<Vec<u64>>> = BTreeMap::new();
        for (q, v) in gens {
            if v.len() != dim {
                return Err(UpsetError::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            raw.entry(q).or_default().push(v);
        }
        Ok(UpwardClosedSet {
            dim,
            basis: Basis::from_raw(&Natural, raw),
        })
    }

    pub(crate) fn from_basis(dim: usize, basis: Basis<Vec<u64>>) -> Self {
        UpwardClosedSet { dim, basis }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Minimal elements at `q`, sorted lexicographically.
    pub fn generators(&self, q: StateId) -> &[Vec<u64>] {
        self.basis.get(q)
    }

    /// `(state, generator)` pairs in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (StateId, &Vec<u64>)> + '_ {
        self.basis
            .gens
            .iter()
            .flat_map(|(q, v)| v.iter().map(move |g| (*q, g)))
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.basis.gens.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.basis.gens.values().map(Vec::len).sum()
    }

    fn same_dim(&self, other: &UpwardClosedSet) -> Result<(), UpsetError> {
        if self.dim != other.dim {
            return Err(UpsetError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    fn sys_dim(&self, sys: &VassMdp) -> Result<(), UpsetError> {
        if self.dim != sys.dim() {
            return Err(UpsetError::DimensionMismatch {
                expected: sys.dim(),
                found: self.dim,
            });
        }
        Ok(())
    }

    pub fn member(&self, c: &Config) -> Result<bool, UpsetError> {
        if c.counters.dim() != self.dim {
            return Err(UpsetError::DimensionMismatch {
                expected: self.dim,
                found: c.counters.dim(),
            });
        }
        Ok(self.basis.contains(&Natural, c.state, &c.counters.0))
    }

    /// Membership without the dimension check; callers hold matching values.
    pub(crate) fn contains(&self, c: &Config) -> bool {
        self.basis.contains(&Natural, c.state, &c.counters.0)
    }

    pub fn union(&self, other: &UpwardClosedSet) -> Result<Self, UpsetError> {
        self.same_dim(other)?;
        Ok(Self::from_basis(self.dim, self.basis.union(&Natural, &other.basis)))
    }

    pub fn intersect(&self, other: &UpwardClosedSet) -> Result<Self, UpsetError> {
        self.same_dim(other)?;
        Ok(Self::from_basis(
            self.dim,
            self.basis.intersect(&Natural, &other.basis),
        ))
    }

    pub fn is_subset(&self, other: &UpwardClosedSet) -> Result<bool, UpsetError> {
        self.same_dim(other)?;
        Ok(self.basis.is_subset(&Natural, &other.basis))
    }

    pub fn equals(&self, other: &UpwardClosedSet) -> Result<bool, UpsetError> {
        Ok(self.is_subset(other)? && other.is_subset(self)?)
    }

    /// Restriction to the states selected by `keep`.
    pub fn restrict(&self, keep: impl Fn(StateId) -> bool) -> Self {
        Self::from_basis(self.dim, self.basis.restrict(keep))
    }

    /// Configurations with some transition in `trans` leading into `self`.
    pub fn pre_exists(&self, sys: &VassMdp, trans: &[TransId]) -> Result<Self, UpsetError> {
        self.sys_dim(sys)?;
        if let Some(t) = trans.iter().find(|t| t.0 >= sys.transitions().len()) {
            return Err(UpsetError::ForeignTransition(t.0));
        }
        let ts = trans.iter().map(|&t| sys.transition(t));
        Ok(Self::from_basis(self.dim, self.basis.pre_exists(&Natural, ts)))
    }

    /// `side ∧ □ self`: side-owned configurations all of whose successors lie
    /// in `self`. Side states without outgoing transitions are included.
    pub fn pre_forall_zero(&self, sys: &VassMdp, side: Owner) -> Result<Self, UpsetError> {
        self.sys_dim(sys)?;
        check_zero_side(sys, side)?;
        Ok(Self::from_basis(
            self.dim,
            self.basis.pre_forall_unchecked(&Natural, sys, side),
        ))
    }

    /// `(Q_1 ∧ ◇(X ∧ Y)) ∨ (◇Y ∧ Q_P ∧ □X)` on a 1-VASS-MDP.
    pub fn inv_pre(sys: &VassMdp, x: &Self, y: &Self) -> Result<Self, UpsetError> {
        x.sys_dim(sys)?;
        y.sys_dim(sys)?;
        if let Some(t) = sys.first_effectful_prob_transition() {
            return Err(UpsetError::NotOneVass(t.name.clone()));
        }
        let one: Vec<TransId> = side_transitions(sys, Owner::One);
        let prob: Vec<TransId> = side_transitions(sys, Owner::Prob);
        let ctrl = x.intersect(y)?.pre_exists(sys, &one)?;
        let env = y
            .pre_exists(sys, &prob)?
            .intersect(&x.pre_forall_zero(sys, Owner::Prob)?)?;
        ctrl.union(&env)
    }

    /// Every per-state basis is sorted and an antichain.
    pub fn is_canonical(&self) -> bool {
        self.basis.gens.iter().all(|(_, v)| {
            !v.is_empty()
                && v.windows(2).all(|w| w[0] < w[1])
                && v.iter().enumerate().all(|(i, a)| {
                    v.iter()
                        .enumerate()
                        .all(|(j, b)| i == j || !Natural.leq(b, a))
                })
                && v.iter().all(|g| g.len() == self.dim)
        })
    }

    /// One line per generator: `state [v1 ... vd]`.
    pub fn serialize(&self, sys: &VassMdp) -> String {
        let mut out = String::new();
        for (q, g) in self.iter() {
            out.push_str(sys.name(q));
            out.push(' ');
            out.push_str(&crate::model::CounterVec(g.clone()).to_string());
            out.push('\n');
        }
        out
    }
}

pub(crate) fn side_transitions(sys: &VassMdp, side: Owner) -> Vec<TransId> {
    sys.transitions()
        .iter()
        .filter(|t| sys.owner(t.source) == side)
        .map(|t| t.id)
        .collect()
}
