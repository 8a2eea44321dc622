//! Seeded plays and Monte-Carlo reach estimates.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Config, Owner, StateId, TransId, Transition, VassMdp};
use crate::mucalc::RegionStrategy;

/// How controller states pick among enabled transitions.
#[derive(Clone, Debug)]
pub enum StrategyHandle {
    Region(RegionStrategy),
    /// Uniformly random enabled transition.
    Uniform,
    /// Fixed choice per state; falls back to the first enabled transition
    /// when the scripted one is disabled or missing.
    Scripted(BTreeMap<StateId, TransId>),
}

impl StrategyHandle {
    pub fn label(&self) -> &'static str {
        match self {
            StrategyHandle::Region(_) => "region",
            StrategyHandle::Uniform => "uniform",
            StrategyHandle::Scripted(_) => "scripted",
        }
    }

    fn choose<R: Rng>(&self, sys: &VassMdp, c: &Config, enabled: &[&Transition], rng: &mut R) -> TransId {
        let first = enabled[0].id;
        match self {
            StrategyHandle::Region(s) => s.choose(sys, c).unwrap_or(first),
            StrategyHandle::Uniform => enabled.choose(rng).map(|t| t.id).unwrap_or(first),
            StrategyHandle::Scripted(table) => table
                .get(&c.state)
                .filter(|t| enabled.iter().any(|e| e.id == **t))
                .copied()
                .unwrap_or(first),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlayStatus {
    Running,
    Deadlocked,
    StepCapped,
}

impl fmt::Display for PlayStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlayStatus::Running => "RUNNING",
            PlayStatus::Deadlocked => "DEADLOCKED",
            PlayStatus::StepCapped => "STEP_CAPPED",
        })
    }
}

/// `configs[i] --moves[i]--> configs[i+1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Play {
    pub configs: Vec<Config>,
    pub moves: Vec<TransId>,
    pub status: PlayStatus,
}

impl Play {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn last(&self) -> &Config {
        self.configs.last().expect("a play has an initial configuration")
    }

    pub fn visits(&self, targets: &[StateId]) -> bool {
        self.configs.iter().any(|c| targets.contains(&c.state))
    }
}

/// Generator for run `stream` of a seeded experiment.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sample<'a, R: Rng>(enabled: &[&'a Transition], rng: &mut R) -> &'a Transition {
    let dist = WeightedIndex::new(enabled.iter().map(|t| t.weight)).expect("positive weights");
    enabled[dist.sample(rng)]
}

/// Advance until a deadlock, `step_cap` moves, or `stop` holds at the
/// current configuration.
fn play<R: Rng>(
    sys: &VassMdp,
    init: &Config,
    strat: &StrategyHandle,
    step_cap: usize,
    rng: &mut R,
    stop: impl Fn(&Config) -> bool,
) -> Play {
    let mut p = Play {
        configs: vec![init.clone()],
        moves: Vec::new(),
        status: PlayStatus::Running,
    };
    loop {
        let c = p.last().clone();
        if stop(&c) {
            return p;
        }
        let enabled = sys.enabled(&c);
        if enabled.is_empty() {
            p.status = PlayStatus::Deadlocked;
            return p;
        }
        if p.moves.len() >= step_cap {
            p.status = PlayStatus::StepCapped;
            return p;
        }
        let t = match sys.owner(c.state) {
            Owner::One => sys.transition(strat.choose(sys, &c, &enabled, rng)),
            Owner::Prob => sample(&enabled, rng),
        };
        let next = sys.step(&c, t).expect("enabled transition");
        p.moves.push(t.id);
        p.configs.push(next);
    }
}

/// A play of at most `step_cap` moves. Ends `DEADLOCKED` when nothing is
/// enabled, `STEP_CAPPED` at the cap.
pub fn run(sys: &VassMdp, init: &Config, strat: &StrategyHandle, step_cap: usize, seed: u64) -> Play {
    let mut rng = rng_for(seed, 0);
    play(sys, init, strat, step_cap, &mut rng, |_| false)
}

/// Fraction of `runs` plays that visit a target within `step_cap` moves.
///
/// A lower estimate of the reach probability: capped plays count as misses.
/// Run `i` uses stream `i` of the generator seeded by `seed`.
pub fn estimate_reach(
    sys: &VassMdp,
    init: &Config,
    strat: &StrategyHandle,
    targets: &[StateId],
    runs: u64,
    step_cap: usize,
    seed: u64,
) -> Ratio<u64> {
    assert!(runs >= 1, "at least one run");
    let hits = (0..runs)
        .filter(|&i| {
            let mut rng = rng_for(seed, i);
            play(sys, init, strat, step_cap, &mut rng, |c| targets.contains(&c.state)).visits(targets)
        })
        .count() as u64;
    Ratio::new(hits, runs)
}

/// One row of a simulation report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimRecord {
    pub instance: String,
    pub strategy: String,
    pub runs: u64,
    pub cap: usize,
    pub frequency: Ratio<u64>,
    pub seed: u64,
}

/// CSV with header `instance,strategy,runs,cap,frequency,seed`; the
/// frequency is printed as a decimal with six places.
pub fn write_csv<W: std::io::Write>(out: W, rows: &[SimRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["instance", "strategy", "runs", "cap", "frequency", "seed"])?;
    for r in rows {
        let freq = *r.frequency.numer() as f64 / *r.frequency.denom() as f64;
        w.write_record([
            r.instance.clone(),
            r.strategy.clone(),
            r.runs.to_string(),
            r.cap.to_string(),
            format!("{freq:.6}"),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
