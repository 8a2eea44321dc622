use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vassmdp::encoders::gen_gadget;
use vassmdp::limitsure::{reduce_once, ExtNat};
use vassmdp::model::{remove_deadlocks, Config, Owner, StateId, SystemBuilder, VassMdp};
use vassmdp::mucalc::{v1_as, v1_sure, w1_as, w1_sure, EvalOptions, Evaluation, MucalcError};
use vassmdp::sim::{estimate_reach, StrategyHandle};
use vassmdp::text::{parse_query, parse_system, serialize_query, serialize_system};
use vassmdp::query::{Problem, QuerySpec};
use vassmdp::upset::UpwardClosedSet;

/// A random system; with `one_vass`, probabilistic moves have zero effect.
fn system(seed: u64, d: usize, n: usize, one_vass: bool) -> VassMdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = SystemBuilder::new(d);
    let owners: Vec<Owner> = (0..n)
        .map(|_| if rng.gen_bool(0.5) { Owner::One } else { Owner::Prob })
        .collect();
    let states: Vec<StateId> = owners
        .iter()
        .enumerate()
        .map(|(i, &o)| b.state(&format!("q{i}"), o).unwrap())
        .collect();
    let mut k = 0;
    for (&q, &o) in states.iter().zip(&owners) {
        let prob = o == Owner::Prob;
        for _ in 0..rng.gen_range(0..=3) {
            let eff = (0..d)
                .map(|_| if one_vass && prob { 0 } else { rng.gen_range(-2..=2) })
                .collect();
            let dst = states[rng.gen_range(0..n)];
            b.transition(&format!("t{k}"), q, eff, dst, rng.gen_range(1..=3)).unwrap();
            k += 1;
        }
    }
    b.build()
}

fn points(d: usize, bound: u64) -> Vec<Vec<u64>> {
    let mut pts = vec![vec![]];
    for _ in 0..d {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                (0..=bound).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    pts
}

fn gens(n: usize, d: usize) -> impl Strategy<Value = Vec<(usize, Vec<u64>)>> {
    prop::collection::vec((0..n, prop::collection::vec(0u64..=4, d)), 0..=5)
}

fn raw_member(raw: &[(usize, Vec<u64>)], q: usize, v: &[u64]) -> bool {
    raw.iter().any(|(s, g)| *s == q && g.iter().zip(v).all(|(a, b)| a <= b))
}

fn upset(d: usize, raw: &[(usize, Vec<u64>)]) -> UpwardClosedSet {
    UpwardClosedSet::from_generators(d, raw.iter().map(|(q, g)| (StateId(*q), g.clone()))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn union_and_intersection_are_pointwise(
        (d, a, b) in (1usize..=3).prop_flat_map(|d| (Just(d), gens(2, d), gens(2, d)))
    ) {
        let (x, y) = (upset(d, &a), upset(d, &b));
        let u = x.union(&y).unwrap();
        let i = x.intersect(&y).unwrap();
        prop_assert!(u.is_canonical() && i.is_canonical() && x.is_canonical());
        for q in 0..2 {
            for v in points(d, 5) {
                let c = Config::new(StateId(q), v.clone());
                let (ma, mb) = (raw_member(&a, q, &v), raw_member(&b, q, &v));
                prop_assert_eq!(x.member(&c).unwrap(), ma);
                prop_assert_eq!(u.member(&c).unwrap(), ma || mb);
                prop_assert_eq!(i.member(&c).unwrap(), ma && mb);
            }
        }
        prop_assert!(x.is_subset(&u).unwrap() && i.is_subset(&x).unwrap());
        prop_assert!(u.equals(&y.union(&x).unwrap()).unwrap());
    }

    #[test]
    fn pre_exists_is_one_step_back(seed in any::<u64>(), d in 1usize..=2, raw in gens(3, 2)) {
        let sys = system(seed, d, 3, false);
        let raw: Vec<_> = raw.into_iter().map(|(q, g)| (q, g[..d].to_vec())).collect();
        let x = upset(d, &raw);
        let all: Vec<_> = sys.transitions().iter().map(|t| t.id).collect();
        let pre = x.pre_exists(&sys, &all).unwrap();
        for q in sys.state_ids() {
            for v in points(d, 5) {
                let c = Config::new(q, v);
                let brute = sys
                    .enabled(&c)
                    .into_iter()
                    .map(|t| sys.step(&c, t).unwrap())
                    .any(|s| raw_member(&raw, s.state.0, &s.counters.0));
                prop_assert_eq!(pre.member(&c).unwrap(), brute, "{:?}", c);
            }
        }
    }

    #[test]
    fn text_round_trip(seed in any::<u64>(), d in 0usize..=3, n in 1usize..=5) {
        let sys = system(seed, d, n, false);
        let init = Config::new(StateId(n - 1), vec![seed % 4; d]);
        let targets = vec![StateId(0)];
        let text = serialize_system(&sys, Some(&init), &targets);
        let f = parse_system(&text).unwrap();
        prop_assert_eq!(f.init.as_ref(), Some(&init));
        prop_assert_eq!(&f.targets, &targets);
        prop_assert_eq!(serialize_system(&f.system, f.init.as_ref(), &f.targets), text);
        for problem in Problem::ALL {
            let q = QuerySpec { problem, init: init.clone(), targets: targets.clone() };
            prop_assert_eq!(parse_query(&serialize_query(&q, &sys), &sys).unwrap(), q);
        }
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn winning_sets_grow_with_targets(seed in any::<u64>(), d in 1usize..=2, n in 2usize..=4) {
        let sys = remove_deadlocks(&system(seed, d, n, true)).unwrap().system;
        let small = vec![StateId(0)];
        let large = vec![StateId(0), StateId(1)];
        type Engine = fn(&VassMdp, &[StateId], &EvalOptions) -> Result<Evaluation, MucalcError>;
        let engines: [(&str, Engine); 4] =
            [("v1_sure", v1_sure), ("w1_sure", w1_sure), ("v1_as", v1_as), ("w1_as", w1_as)];
        let opts = EvalOptions { nu_budget: 12, accelerate: true };
        let mut sets = BTreeMap::new();
        for (name, f) in engines {
            let a = f(&sys, &small, &opts).unwrap();
            let b = f(&sys, &large, &opts).unwrap();
            prop_assert!(a.lower.is_subset(&a.upper).unwrap(), "{}", name);
            if a.exact && b.exact {
                prop_assert!(a.upper.is_subset(&b.upper).unwrap(), "{}", name);
                sets.insert(name, a.upper);
            }
        }
        if let (Some(s), Some(a)) = (sets.get("v1_sure"), sets.get("v1_as")) {
            prop_assert!(s.is_subset(a).unwrap());
        }
        if let (Some(s), Some(a)) = (sets.get("w1_sure"), sets.get("w1_as")) {
            prop_assert!(s.is_subset(a).unwrap());
        }
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reduction_conserves_weights_and_isolates_colours(seed in any::<u64>(), d in 1usize..=2) {
        let sys = system(seed, d, 4, true);
        let init = Config::new(StateId(0), vec![1; d]);
        let r = reduce_once(&sys, &init, &[StateId(1)]).unwrap();
        let red = &r.system;
        prop_assert_eq!(red.dim(), d - 1);
        let out_weight = |s: &VassMdp, q: StateId| s.outgoing(q).map(|t| t.weight).sum::<u64>();
        for (i, node) in r.trace.iter().enumerate() {
            match node.color {
                None if r.trace.iter().any(|m| m.parent == Some(i) && m.color.is_some()) => {
                    // Dominating node: its only move enters the colour copy.
                    let out: Vec<_> = red.outgoing(node.id).collect();
                    prop_assert_eq!(out.len(), 1);
                    prop_assert_eq!(out[0].weight, 1);
                }
                None => {
                    let counters: Vec<u64> = node
                        .counters
                        .0
                        .iter()
                        .map(|x| match x {
                            ExtNat::Fin(v) => *v,
                            ExtNat::Star => unreachable!("uncoloured labels are finite"),
                        })
                        .collect();
                    let c = Config::new(node.state, counters);
                    let want: u64 = sys.enabled(&c).iter().map(|t| t.weight).sum();
                    prop_assert_eq!(out_weight(red, node.id), want);
                    prop_assert!(red.owner(node.id) == sys.owner(node.state));
                }
                Some((colour, _)) => {
                    let prefix = format!("c{colour}_");
                    for q in red.state_ids().filter(|&q| red.name(q).starts_with(&prefix)) {
                        let orig = sys.lookup(&red.name(q)[prefix.len()..]).unwrap();
                        prop_assert_eq!(out_weight(red, q), out_weight(&sys, orig));
                        for t in red.outgoing(q) {
                            prop_assert!(red.name(t.target).starts_with(&prefix), "{} leaks", t.name);
                        }
                    }
                }
            }
        }
        prop_assert_eq!(r.trace[0].parent, None);
    }
}

#[test]
fn pump_frequency_rises_with_credit() {
    let g = gen_gadget("FIX-PUMP").unwrap();
    let p = g.system.lookup("p").unwrap();
    let mut last = 0.0;
    for n in 0..=6u64 {
        let c = Config::new(p, vec![n]);
        let r = estimate_reach(&g.system, &c, &StrategyHandle::Uniform, &g.targets, 4000, 100, 21);
        let f = *r.numer() as f64 / *r.denom() as f64;
        let exact = 1.0 - 0.5f64.powi(n as i32 + 1);
        assert!((f - exact).abs() < 0.03, "n={n}: {f} vs {exact}");
        // Runs share random streams across n, so the frequencies are monotone.
        assert!(f >= last, "n={n}: {f} < {last}");
        last = f;
    }
}
