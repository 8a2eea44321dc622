//! Random instances shared by the integration suites.

#![allow(dead_code)]

use rand::Rng;
use vassmdp::finitemdp::unfold;
use vassmdp::model::{Config, Owner, StateId, SystemBuilder, VassMdp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    OneVass,
    /// Every state keeps a nonnegative exit, so no configuration deadlocks.
    DeadlockFreePVass,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub sys: VassMdp,
    pub init: Config,
    pub targets: Vec<StateId>,
    pub cap: u64,
    pub kind: Kind,
}

/// Effects lean negative so that unfoldings stay small.
fn effect<R: Rng>(rng: &mut R, d: usize) -> Vec<i64> {
    (0..d)
        .map(|_| [-2, -1, -1, 0, 0, 0, 1, 1, 2][rng.gen_range(0..9)])
        .collect()
}

pub fn random_system<R: Rng>(rng: &mut R, kind: Kind, d: usize, n: usize) -> VassMdp {
    let mut b = SystemBuilder::new(d);
    let owners: Vec<Owner> = (0..n)
        .map(|_| if rng.gen_bool(0.5) { Owner::One } else { Owner::Prob })
        .collect();
    let states: Vec<StateId> = owners
        .iter()
        .enumerate()
        .map(|(i, &o)| b.state(&format!("q{i}"), o).unwrap())
        .collect();
    let zero_side = match kind {
        Kind::OneVass => Owner::Prob,
        Kind::DeadlockFreePVass => Owner::One,
    };
    let mut k = 0;
    for (i, &q) in states.iter().enumerate() {
        let owner = owners[i];
        let outs = rng.gen_range(0..=3);
        let mut has_nonneg = false;
        for _ in 0..outs {
            let dst = states[rng.gen_range(0..n)];
            let eff = if owner == zero_side { vec![0; d] } else { effect(rng, d) };
            has_nonneg |= eff.iter().all(|&x| x >= 0);
            b.transition(&format!("t{k}"), q, eff, dst, rng.gen_range(1..=3)).unwrap();
            k += 1;
        }
        if kind == Kind::DeadlockFreePVass && !has_nonneg {
            let dst = states[rng.gen_range(0..n)];
            b.transition(&format!("t{k}"), q, vec![0; d], dst, 1).unwrap();
            k += 1;
        }
    }
    b.build()
}

/// A random instance whose reachable configurations never exceed its cap,
/// or `None` when the draw is not cap-closed.
pub fn random_instance<R: Rng>(rng: &mut R, kind: Kind, max_dim: usize) -> Option<Instance> {
    let d = rng.gen_range(1..=max_dim);
    let n = rng.gen_range(2..=5);
    let sys = random_system(rng, kind, d, n);
    let init = Config::new(StateId(0), (0..d).map(|_| rng.gen_range(0..=3)).collect());
    let mut targets = vec![StateId(rng.gen_range(0..n))];
    if rng.gen_bool(0.3) {
        let t = StateId(rng.gen_range(0..n));
        if !targets.contains(&t) {
            targets.push(t);
        }
    }
    let cap = rng.gen_range(3..=6);
    if init.counters.0.iter().any(|&v| v > cap) {
        return None;
    }
    unfold(&sys, &init, &targets, cap, false).ok()?;
    Some(Instance {
        sys,
        init,
        targets,
        cap,
        kind,
    })
}
