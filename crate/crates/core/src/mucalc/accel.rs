//! ω-acceleration of descending greatest-fixpoint iterations.
//!
//! A run of iterates `X_k, …, X_{k+L}` follows a shifting pattern when every
//! `X_{k+n}` has the minimal elements `S ∪ (M + n·δ)` for a fixed stable
//! part `S`, fixed moving generators `M` and a fixed nonzero shift `δ ≥ 0`.
//! The pattern is proved to continue forever by evaluating one step of the
//! body symbolically in `n` over generators `a + c·n`, which shows
//! `G(X(n)) ⊆ X(n+1)` for every `n` past a threshold. Monotonicity of `G`
//! then gives `gfp ⊆ ⋂_n X(n) = ↑S`.

use std::cell::Cell;
use std::collections::BTreeMap;

use crate::model::{Owner, StateId, Transition, VassMdp};
use crate::upset::{Basis, UpwardClosedSet, VecOrder};

use super::formula::Formula;

/// A shifting pattern found at the tail of an iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Pattern {
    /// Number of shifts observed (`X(0) … X(len)` match the concrete run).
    pub(crate) len: usize,
    pub(crate) stable: Vec<(StateId, Vec<u64>)>,
    /// Moving generators of `X(0)`.
    pub(crate) moving: Vec<(StateId, Vec<u64>)>,
    pub(crate) delta: Vec<u64>,
}

impl Pattern {
    pub(crate) fn stable_basis(&self) -> Basis<Vec<u64>> {
        let mut raw: BTreeMap<StateId, Vec<Vec<u64>>> = BTreeMap::new();
        for (q, v) in &self.stable {
            raw.entry(*q).or_default().push(v.clone());
        }
        Basis::from_raw(&crate::upset::Natural, raw)
    }
}

fn gens(x: &UpwardClosedSet) -> Vec<(StateId, Vec<u64>)> {
    x.iter().map(|(q, v)| (q, v.clone())).collect()
}

/// Longest shifting pattern ending at the last iterate, if it spans at least
/// `min_run` shifts.
pub(crate) fn detect(iterates: &[UpwardClosedSet], min_run: usize) -> Option<Pattern> {
    let m = iterates.len().checked_sub(1)?;
    if m < min_run.max(1) {
        return None;
    }
    let last = gens(&iterates[m]);
    let prev = gens(&iterates[m - 1]);
    let stable: Vec<_> = last.iter().filter(|g| prev.contains(g)).cloned().collect();
    let moving = |all: &[(StateId, Vec<u64>)]| -> Vec<(StateId, Vec<u64>)> {
        all.iter().filter(|g| !stable.contains(g)).cloned().collect()
    };
    let m_last = moving(&last);
    let m_prev = moving(&prev);
    if m_last.is_empty() || m_last.len() != m_prev.len() {
        return None;
    }
    let delta = shift_of(&m_prev, &m_last)?;
    if delta.iter().all(|&x| x == 0) {
        return None;
    }
    let mut len = 1;
    let mut cur = m_prev;
    for i in (0..m - 1).rev() {
        let g = gens(&iterates[i]);
        if !stable.iter().all(|s| g.contains(s)) {
            break;
        }
        let mv = moving(&g);
        if mv.len() != cur.len() || shift_of(&mv, &cur).as_ref() != Some(&delta) {
            break;
        }
        len += 1;
        cur = mv;
    }
    (len >= min_run).then_some(Pattern {
        len,
        stable,
        moving: cur,
        delta,
    })
}

/// The common shift taking every generator of `a` to its partner in `b`.
fn shift_of(a: &[(StateId, Vec<u64>)], b: &[(StateId, Vec<u64>)]) -> Option<Vec<u64>> {
    let mut delta: Option<Vec<u64>> = None;
    for ((qa, va), (qb, vb)) in a.iter().zip(b) {
        if qa != qb {
            return None;
        }
        let d = va
            .iter()
            .zip(vb)
            .map(|(x, y)| y.checked_sub(*x))
            .collect::<Option<Vec<u64>>>()?;
        match &delta {
            None => delta = Some(d),
            Some(e) if *e == d => {}
            Some(_) => return None,
        }
    }
    delta
}

/// A coordinate `a + c·n` with `c ≥ 0`.
type Affine = (i64, i64);
type PVec = Vec<Affine>;

/// Order on affine vectors meaning "for every `n` from the threshold on".
/// Every decision that only holds eventually raises the threshold.
pub(crate) struct Param {
    threshold: Cell<i64>,
}

fn ceil_div(p: i64, q: i64) -> i64 {
    -((-p).div_euclid(q))
}

impl Param {
    fn new() -> Self {
        Param {
            threshold: Cell::new(0),
        }
    }

    fn need(&self, n: i64) {
        if n > self.threshold.get() {
            self.threshold.set(n);
        }
    }

    /// Eventually strictly smaller.
    fn less(a: Affine, b: Affine) -> bool {
        a.1 < b.1 || (a.1 == b.1 && a.0 < b.0)
    }
}

impl VecOrder for Param {
    type V = PVec;

    fn leq(&self, x: &PVec, y: &PVec) -> bool {
        let mut need = 0;
        for (&(a1, c1), &(a2, c2)) in x.iter().zip(y) {
            if c1 < c2 {
                need = need.max(ceil_div(a1 - a2, c2 - c1));
            } else if c1 > c2 || a1 > a2 {
                return false;
            }
        }
        self.need(need);
        true
    }

    fn join(&self, x: &PVec, y: &PVec) -> PVec {
        x.iter()
            .zip(y)
            .map(|(&(a1, c1), &(a2, c2))| {
                if c1 == c2 {
                    (a1.max(a2), c1)
                } else if c1 > c2 {
                    self.need(ceil_div(a2 - a1, c1 - c2));
                    (a1, c1)
                } else {
                    self.need(ceil_div(a1 - a2, c2 - c1));
                    (a2, c2)
                }
            })
            .collect()
    }

    fn pre(&self, b: &PVec, effect: &[i64]) -> PVec {
        b.iter()
            .zip(effect)
            .map(|(&(a, c), &z)| {
                if c == 0 {
                    ((a - z).max(0), 0)
                } else {
                    self.need(ceil_div(z - a, c));
                    (a - z, c)
                }
            })
            .collect()
    }

    fn zero(&self, dim: usize) -> PVec {
        vec![(0, 0); dim]
    }
}

const MU_CAP: usize = 64;
const NU_STEPS: usize = 20;

struct ParamEval<'a> {
    sys: &'a VassMdp,
    o: Param,
}

type PBasis = Basis<PVec>;

impl ParamEval<'_> {
    fn trans(&self, owner: Option<Owner>) -> Vec<&Transition> {
        self.sys
            .transitions()
            .iter()
            .filter(|t| owner.is_none_or(|o| self.sys.owner(t.source) == o))
            .collect()
    }

    fn eval(&self, f: &Formula, env: &mut BTreeMap<String, PBasis>) -> Option<PBasis> {
        let o = &self.o;
        match f {
            Formula::Atom(q) => Some(Basis::atoms(o, self.sys.dim(), [*q])),
            Formula::Var(v) => env.get(v).cloned(),
            Formula::And(a, b) => {
                let x = self.eval(a, env)?;
                Some(x.intersect(o, &self.eval(b, env)?))
            }
            Formula::Or(a, b) => {
                let x = self.eval(a, env)?;
                Some(x.union(o, &self.eval(b, env)?))
            }
            Formula::Diamond(owner, g) => {
                let x = self.eval(g, env)?;
                Some(x.pre_exists(o, self.trans(*owner)))
            }
            Formula::GuardedBox(side, g) => {
                let x = self.eval(g, env)?;
                Some(x.pre_forall_unchecked(o, self.sys, *side))
            }
            Formula::Mu(var, body) => {
                let mut y = PBasis::default();
                for _ in 0..MU_CAP {
                    let old = env.insert(var.clone(), y.clone());
                    let h = self.eval(body, env);
                    restore(env, var, old);
                    let h = h?;
                    if h.is_subset(o, &y) {
                        return Some(y);
                    }
                    y = self.widen(&y, &y.union(o, &h));
                }
                None
            }
            Formula::Nu(var, body) => {
                let mut x = Basis::full(o, self.sys);
                for _ in 0..NU_STEPS {
                    let old = env.insert(var.clone(), x.clone());
                    let h = self.eval(body, env);
                    restore(env, var, old);
                    let next = x.intersect(o, &h?);
                    if next == x {
                        break;
                    }
                    x = next;
                }
                Some(x)
            }
        }
    }

    /// Coordinates in which a new generator undercuts a generator it
    /// replaced are dropped to zero, so descending chains close in one step.
    fn widen(&self, old: &PBasis, new: &PBasis) -> PBasis {
        let o = &self.o;
        let mut raw: BTreeMap<StateId, Vec<PVec>> = BTreeMap::new();
        for (q, gs) in &new.gens {
            let before = old.get(*q);
            for g in gs {
                let mut w = g.clone();
                if !before.contains(g) {
                    for h in before.iter().filter(|h| !gs.contains(h)) {
                        for (i, (gi, hi)) in g.iter().zip(h).enumerate() {
                            if Param::less(*gi, *hi) {
                                w[i] = (0, 0);
                            }
                        }
                    }
                }
                raw.entry(*q).or_default().push(w);
            }
        }
        Basis::from_raw(o, raw)
    }
}

fn restore(env: &mut BTreeMap<String, PBasis>, var: &str, old: Option<PBasis>) {
    match old {
        Some(v) => env.insert(var.to_string(), v),
        None => env.remove(var),
    };
}

fn lift(b: &Basis<Vec<u64>>) -> PBasis {
    Basis {
        gens: b
            .gens
            .iter()
            .map(|(q, vs)| {
                let lifted = vs
                    .iter()
                    .map(|v| v.iter().map(|&x| (x as i64, 0)).collect())
                    .collect();
                (*q, lifted)
            })
            .collect(),
    }
}

/// Prove that the pattern continues forever under `X ↦ X ∩ body(X)`.
pub(crate) fn verify(
    sys: &VassMdp,
    var: &str,
    body: &Formula,
    vars: &BTreeMap<String, UpwardClosedSet>,
    p: &Pattern,
) -> bool {
    let pe = ParamEval {
        sys,
        o: Param::new(),
    };
    let mut env: BTreeMap<String, PBasis> = vars
        .iter()
        .filter(|(k, _)| k.as_str() != var)
        .map(|(k, v)| (k.clone(), lift(&v.basis)))
        .collect();
    let mut raw: BTreeMap<StateId, Vec<PVec>> = BTreeMap::new();
    for (q, v) in &p.stable {
        raw.entry(*q)
            .or_default()
            .push(v.iter().map(|&x| (x as i64, 0)).collect());
    }
    for (q, v) in &p.moving {
        raw.entry(*q).or_default().push(
            v.iter()
                .zip(&p.delta)
                .map(|(&x, &d)| (x as i64, d as i64))
                .collect(),
        );
    }
    let x_n = Basis::from_raw(&pe.o, raw);
    let shifted = Basis {
        gens: x_n
            .gens
            .iter()
            .map(|(q, vs)| {
                let s = vs
                    .iter()
                    .map(|v| v.iter().map(|&(a, c)| (a + c, c)).collect())
                    .collect();
                (*q, s)
            })
            .collect(),
    };
    env.insert(var.to_string(), x_n.clone());
    let Some(h) = pe.eval(body, &mut env) else {
        return false;
    };
    let image = x_n.intersect(&pe.o, &h);
    image.is_subset(&pe.o, &shifted) && pe.o.threshold.get() <= p.len as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemBuilder;

    fn ucs(gens: &[(usize, u64)]) -> UpwardClosedSet {
        UpwardClosedSet::from_generators(1, gens.iter().map(|&(q, v)| (StateId(q), vec![v]))).unwrap()
    }

    #[test]
    fn detects_shift() {
        let its: Vec<_> = (0..6).map(|n| ucs(&[(0, 0), (1, n + 1), (2, n + 2)])).collect();
        let p = detect(&its, 4).unwrap();
        assert_eq!(p.len, 5);
        assert_eq!(p.delta, vec![1]);
        assert_eq!(p.stable, vec![(StateId(0), vec![0])]);
        assert_eq!(p.moving, vec![(StateId(1), vec![1]), (StateId(2), vec![2])]);
        assert!(detect(&its, 6).is_none());
        let flat: Vec<_> = (0..6).map(|_| ucs(&[(0, 0)])).collect();
        assert!(detect(&flat, 2).is_none());
    }

    #[test]
    fn param_order_thresholds() {
        let o = Param::new();
        assert!(o.leq(&vec![(5, 0)], &vec![(0, 1)]));
        assert_eq!(o.threshold.get(), 5);
        assert!(!o.leq(&vec![(0, 1)], &vec![(5, 0)]));
        assert_eq!(o.join(&vec![(3, 0)], &vec![(0, 2)]), vec![(0, 2)]);
        assert_eq!(o.threshold.get(), 5);
        assert_eq!(o.pre(&vec![(1, 1)], &[3]), vec![(-2, 1)]);
        assert_eq!(o.pre(&vec![(1, 0)], &[3]), vec![(0, 0)]);
        assert_eq!(ceil_div(-3, 2), -1);
        assert_eq!(ceil_div(3, 2), 2);
    }

    #[test]
    fn rejects_wrong_pattern() {
        // νX. ◇X: q counts down forever only from nowhere, r loops.
        let mut b = SystemBuilder::new(1);
        let q = b.state("q", Owner::One).unwrap();
        let r = b.state("r", Owner::One).unwrap();
        b.transition("dec", q, vec![-1], q, 1).unwrap();
        b.transition("stay", r, vec![0], r, 1).unwrap();
        let sys = b.build();
        let body = Formula::diamond(Formula::var("X"));
        let good = Pattern {
            len: 5,
            stable: vec![(r, vec![0])],
            moving: vec![(q, vec![1])],
            delta: vec![1],
        };
        assert!(verify(&sys, "X", &body, &BTreeMap::new(), &good));
        let bad = Pattern {
            len: 5,
            stable: vec![],
            moving: vec![(r, vec![1])],
            delta: vec![1],
        };
        assert!(!verify(&sys, "X", &body, &BTreeMap::new(), &bad));
    }
}
