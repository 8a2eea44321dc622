//! VASS-MDP data model and the step semantics of the induced MDP.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

/// Index of a control state inside its owning [`VassMdp`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

/// Index of a transition inside its owning [`VassMdp`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransId(pub usize);

/// Which player resolves the choice at a control state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Owner {
    /// The controller (nondeterministic choice).
    One,
    /// The random environment (weighted choice).
    Prob,
}

impl Owner {
    pub fn other(self) -> Owner {
        match self {
            Owner::One => Owner::Prob,
            Owner::Prob => Owner::One,
        }
    }
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::One => write!(f, "1"),
            Owner::Prob => write!(f, "P"),
        }
    }
}

/// A vector of counter values in ℕ^d.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CounterVec(pub Vec<u64>);

impl CounterVec {
    pub fn zeros(dim: usize) -> Self {
        CounterVec(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `self + effect` if the result stays nonnegative.
    pub fn add_effect(&self, effect: &EffectVec) -> Option<CounterVec> {
        debug_assert_eq!(self.0.len(), effect.0.len());
        self.0
            .iter()
            .zip(&effect.0)
            .map(|(&v, &z)| {
                let s = v as i128 + z as i128;
                (s >= 0).then_some(s as u64)
            })
            .collect::<Option<Vec<_>>>()
            .map(CounterVec)
    }

    /// Componentwise `≤`.
    pub fn le(&self, other: &CounterVec) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl fmt::Display for CounterVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_bracketed(f, self.0.iter())
    }
}

/// An integer transition label in ℤ^d.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EffectVec(pub Vec<i64>);

impl EffectVec {
    pub fn zeros(dim: usize) -> Self {
        EffectVec(vec![0; dim])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&z| z == 0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&z| z >= 0)
    }

    pub fn max_abs(&self) -> u64 {
        self.0.iter().map(|z| z.unsigned_abs()).max().unwrap_or(0)
    }
}

impl fmt::Display for EffectVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_bracketed(f, self.0.iter())
    }
}

pub(crate) fn write_bracketed<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    items: impl Iterator<Item = T>,
) -> fmt::Result {
    write!(f, "[")?;
    for (i, x) in items.enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, "]")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    pub name: String,
    pub owner: Owner,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub id: TransId,
    pub name: String,
    pub source: StateId,
    pub effect: EffectVec,
    pub target: StateId,
    pub weight: u64,
}

/// A configuration `⟨q, v⟩`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    pub state: StateId,
    pub counters: CounterVec,
}

impl Config {
    pub fn new(state: StateId, counters: Vec<u64>) -> Self {
        Config {
            state,
            counters: CounterVec(counters),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("duplicate transition id `{0}`")]
    DuplicateTransition(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("transition `{0}` has weight 0")]
    ZeroWeight(String),
    #[error("transition `{0}` is not enabled at the given configuration")]
    NotEnabled(String),
    #[error("configuration is a deadlock")]
    Deadlock,
    #[error("state `{0}` is not owned by the probabilistic player")]
    WrongOwner(String),
    #[error("system is not a 1-VASS-MDP: probabilistic transition `{0}` changes the counters")]
    NotOneVass(String),
}

/// Subclass flags of a VASS-MDP.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    /// Every transition leaving a controller state has zero effect.
    pub is_p_vass: bool,
    /// Every transition leaving a probabilistic state has zero effect.
    pub is_one_vass: bool,
    /// No configuration at all is a deadlock.
    pub deadlock_free_all_configs: bool,
    /// The owner whose transitions are all zero-effect, if any.
    pub single_sided_side: Option<Owner>,
}

/// A Markov decision process induced by a VASS with partitioned control states.
///
/// Immutable once built; use [`SystemBuilder`] to construct one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VassMdp {
    dim: usize,
    states: Vec<State>,
    transitions: Vec<Transition>,
    outgoing: Vec<Vec<TransId>>,
    by_name: HashMap<String, StateId>,
}

pub struct SystemBuilder {
    dim: usize,
    states: Vec<State>,
    transitions: Vec<Transition>,
    by_name: HashMap<String, StateId>,
    trans_names: HashSet<String>,
}

impl SystemBuilder {
    pub fn new(dim: usize) -> Self {
        SystemBuilder {
            dim,
            states: Vec::new(),
            transitions: Vec::new(),
            by_name: HashMap::new(),
            trans_names: HashSet::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&mut self, name: &str, owner: Owner) -> Result<StateId, ModelError> {
        if self.by_name.contains_key(name) {
            return Err(ModelError::DuplicateState(name.to_string()));
        }
        let id = StateId(self.states.len());
        self.states.push(State {
            name: name.to_string(),
            owner,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<StateId> {
        self.by_name.get(name).copied()
    }

    pub fn state_name(&self, id: StateId) -> &str {
        &self.states[id.0].name
    }

    pub fn has_transition(&self, name: &str) -> bool {
        self.trans_names.contains(name)
    }

    pub fn transition(
        &mut self,
        name: &str,
        source: StateId,
        effect: Vec<i64>,
        target: StateId,
        weight: u64,
    ) -> Result<TransId, ModelError> {
        if self.trans_names.contains(name) {
            return Err(ModelError::DuplicateTransition(name.to_string()));
        }
        if effect.len() != self.dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim,
                found: effect.len(),
            });
        }
        if weight == 0 {
            return Err(ModelError::ZeroWeight(name.to_string()));
        }
        for s in [source, target] {
            if s.0 >= self.states.len() {
                return Err(ModelError::UnknownState(format!("#{}", s.0)));
            }
        }
        let id = TransId(self.transitions.len());
        self.transitions.push(Transition {
            id,
            name: name.to_string(),
            source,
            effect: EffectVec(effect),
            target,
            weight,
        });
        self.trans_names.insert(name.to_string());
        Ok(id)
    }

    /// Transition looked up by state names.
    pub fn transition_by_name(
        &mut self,
        name: &str,
        source: &str,
        effect: Vec<i64>,
        target: &str,
        weight: u64,
    ) -> Result<TransId, ModelError> {
        let s = self
            .lookup(source)
            .ok_or_else(|| ModelError::UnknownState(source.to_string()))?;
        let t = self
            .lookup(target)
            .ok_or_else(|| ModelError::UnknownState(target.to_string()))?;
        self.transition(name, s, effect, t, weight)
    }

    pub fn build(self) -> VassMdp {
        let mut outgoing = vec![Vec::new(); self.states.len()];
        for t in &self.transitions {
            outgoing[t.source.0].push(t.id);
        }
        VassMdp {
            dim: self.dim,
            states: self.states,
            transitions: self.transitions,
            outgoing,
            by_name: self.by_name,
        }
    }
}

impl VassMdp {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.states.len()).map(StateId)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, id: StateId) -> &State {
        &self.states[id.0]
    }

    pub fn owner(&self, id: StateId) -> Owner {
        self.states[id.0].owner
    }

    pub fn name(&self, id: StateId) -> &str {
        &self.states[id.0].name
    }

    pub fn lookup(&self, name: &str) -> Option<StateId> {
        self.by_name.get(name).copied()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, id: TransId) -> &Transition {
        &self.transitions[id.0]
    }

    pub fn outgoing(&self, q: StateId) -> impl Iterator<Item = &Transition> + '_ {
        self.outgoing[q.0].iter().map(move |t| &self.transitions[t.0])
    }

    pub fn owned_by(&self, owner: Owner) -> impl Iterator<Item = StateId> + '_ {
        self.state_ids().filter(move |&q| self.owner(q) == owner)
    }

    /// Largest absolute effect entry over all transitions.
    pub fn max_abs_effect(&self) -> u64 {
        self.transitions
            .iter()
            .map(|t| t.effect.max_abs())
            .max()
            .unwrap_or(0)
    }

    /// Rebuild into a builder so states and transitions can be appended.
    pub fn to_builder(&self) -> SystemBuilder {
        SystemBuilder {
            dim: self.dim,
            states: self.states.clone(),
            transitions: self.transitions.clone(),
            by_name: self.by_name.clone(),
            trans_names: self.transitions.iter().map(|t| t.name.clone()).collect(),
        }
    }

    pub fn check_config(&self, c: &Config) -> Result<(), ModelError> {
        if c.state.0 >= self.states.len() {
            return Err(ModelError::UnknownState(format!("#{}", c.state.0)));
        }
        if c.counters.dim() != self.dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim,
                found: c.counters.dim(),
            });
        }
        Ok(())
    }

    /// Transitions enabled at `c`, in declaration order.
    pub fn enabled(&self, c: &Config) -> Vec<&Transition> {
        self.outgoing(c.state)
            .filter(|t| c.counters.add_effect(&t.effect).is_some())
            .collect()
    }

    pub fn step(&self, c: &Config, t: &Transition) -> Result<Config, ModelError> {
        if t.source != c.state {
            return Err(ModelError::NotEnabled(t.name.clone()));
        }
        let counters = c
            .counters
            .add_effect(&t.effect)
            .ok_or_else(|| ModelError::NotEnabled(t.name.clone()))?;
        Ok(Config {
            state: t.target,
            counters,
        })
    }

    /// Successor distribution at a probabilistic configuration, as exact rationals.
    ///
    /// Transitions reaching the same successor aggregate their weights.
    pub fn distribution(&self, c: &Config) -> Result<BTreeMap<Config, Ratio<u64>>, ModelError> {
        if self.owner(c.state) != Owner::Prob {
            return Err(ModelError::WrongOwner(self.name(c.state).to_string()));
        }
        let enabled = self.enabled(c);
        if enabled.is_empty() {
            return Err(ModelError::Deadlock);
        }
        let total: u64 = enabled.iter().map(|t| t.weight).sum();
        let mut weights: BTreeMap<Config, u64> = BTreeMap::new();
        for t in enabled {
            let succ = self.step(c, t)?;
            *weights.entry(succ).or_default() += t.weight;
        }
        Ok(weights
            .into_iter()
            .map(|(k, w)| (k, Ratio::new(w, total)))
            .collect())
    }

    pub fn classify(&self) -> Classification {
        let zero_side = |owner: Owner| {
            self.transitions
                .iter()
                .filter(|t| self.owner(t.source) == owner)
                .all(|t| t.effect.is_zero())
        };
        let is_p_vass = zero_side(Owner::One);
        let is_one_vass = zero_side(Owner::Prob);
        // (q, 0) is a deadlock unless some outgoing transition is nonnegative,
        // and a nonnegative transition is enabled everywhere.
        let deadlock_free_all_configs = self
            .state_ids()
            .all(|q| self.outgoing(q).any(|t| t.effect.is_nonnegative()));
        let single_sided_side = if is_one_vass {
            Some(Owner::Prob)
        } else if is_p_vass {
            Some(Owner::One)
        } else {
            None
        };
        Classification {
            is_p_vass,
            is_one_vass,
            deadlock_free_all_configs,
            single_sided_side,
        }
    }

    /// First probabilistic transition with a nonzero effect, if any.
    pub fn first_effectful_prob_transition(&self) -> Option<&Transition> {
        self.transitions
            .iter()
            .find(|t| self.owner(t.source) == Owner::Prob && !t.effect.is_zero())
    }
}

/// A name not yet used by `taken`, derived from `base`.
pub(crate) fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> String {
    if !taken(base) {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}_{i}"))
        .find(|n| !taken(n))
        .expect("unbounded name supply")
}

/// Result of [`remove_deadlocks`]: the new system and the sink it introduced.
#[derive(Clone, Debug)]
pub struct DeadlockFree {
    pub system: VassMdp,
    pub sink: StateId,
}

/// Make a 1-VASS-MDP deadlock-free without changing any qualitative verdict.
///
/// Every controller state gains a zero-effect escape to a fresh absorbing
/// sink, and every probabilistic state without outgoing transitions gains a
/// zero-effect edge to the same sink. The sink is never a target, so in the
/// new arena a play that used to deadlock is forced into a losing absorbing
/// loop instead.
pub fn remove_deadlocks(sys: &VassMdp) -> Result<DeadlockFree, ModelError> {
    if let Some(t) = sys.first_effectful_prob_transition() {
        return Err(ModelError::NotOneVass(t.name.clone()));
    }
    let mut b = sys.to_builder();
    let sink_name = fresh_name("sink", |n| b.lookup(n).is_some());
    let sink = b.state(&sink_name, Owner::Prob)?;
    let zero = vec![0i64; sys.dim()];
    for q in sys.state_ids() {
        let needs_edge = match sys.owner(q) {
            Owner::One => true,
            Owner::Prob => sys.outgoing(q).next().is_none(),
        };
        if needs_edge {
            let name = fresh_name(&format!("esc_{}", sys.name(q)), |n| b.has_transition(n));
            b.transition(&name, q, zero.clone(), sink, 1)?;
        }
    }
    let loop_name = fresh_name("sink_loop", |n| b.has_transition(n));
    b.transition(&loop_name, sink, zero, sink, 1)?;
    Ok(DeadlockFree {
        system: b.build(),
        sink,
    })
}
