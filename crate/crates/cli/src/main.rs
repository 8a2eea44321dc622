use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vassmdp::check::{check, class_line, CheckOptions, SystemClass};
use vassmdp::encoders::{encode_with, gen_gadget, Figure, MinskyMachine};
use vassmdp::finitemdp::bounded_oracle;
use vassmdp::limitsure::reduce_once;
use vassmdp::model::{remove_deadlocks, Config, StateId, VassMdp};
use vassmdp::mucalc::{self, extract_strategy, parse_formula, EvalOptions, Env, Membership};
use vassmdp::query::{Answer, Problem, QuerySpec};
use vassmdp::sim::{estimate_reach, write_csv, SimRecord, StrategyHandle};
use vassmdp::text::{parse_query, parse_system, serialize_system, SystemFile};

const USAGE: u8 = 3;

// Output goes through these so a closed pipe does not abort the process.
macro_rules! out {
    ($($a:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($a)*);
    }};
}

macro_rules! outln {
    ($($a:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($a)*);
    }};
}

#[derive(Parser)]
#[command(name = "vmdp", version, about = "Qualitative verification of VASS Markov decision processes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    General,
    PvassDeadlock,
    PvassDeadlockfree,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Uniform,
    Region,
}

#[derive(clap::Args)]
struct EvalArgs {
    /// Iteration budget per greatest fixpoint.
    #[arg(long, default_value_t = 1000)]
    nu_budget: usize,
    #[arg(long, value_enum, default_value = "on")]
    accelerate: Switch,
}

impl EvalArgs {
    fn options(&self) -> EvalOptions {
        EvalOptions {
            nu_budget: self.nu_budget,
            accelerate: matches!(self.accelerate, Switch::On),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Report the subclass and deadlock-freeness of a system.
    Classify { system: PathBuf },
    /// Decide a qualitative question.
    Check {
        system: PathBuf,
        /// Query file with `problem`, `init` and `target` lines; defaults to
        /// the system file's own `init` and `target` lines.
        #[arg(long)]
        query: Option<PathBuf>,
        #[arg(long)]
        problem: Option<Problem>,
        #[command(flatten)]
        eval: EvalArgs,
        /// Counter cap for the bounded oracle on undecidable cells.
        #[arg(long)]
        cap: Option<u64>,
        /// Simulation runs on undecidable cells.
        #[arg(long)]
        runs: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Remove one counter dimension (or all with `--all`).
    ReduceDim {
        system: PathBuf,
        #[arg(long)]
        all: bool,
        /// Write the node labels here instead of appending them as comments.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Encode a two-counter Minsky machine.
    EncodeMinsky {
        machine: PathBuf,
        #[arg(long, value_enum, default_value = "general")]
        figure: FigureArg,
    },
    /// Monte-Carlo reach frequency, as CSV.
    Simulate {
        system: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        /// Step cap per play.
        #[arg(long, default_value_t = 200)]
        cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "uniform")]
        strategy: StrategyArg,
    },
    /// Exact answer on the explicit unfolding of a cap-closed instance.
    Oracle {
        system: PathBuf,
        #[arg(long)]
        problem: Problem,
        #[arg(long)]
        cap: u64,
    },
    /// Print a fixture system.
    GenGadget { name: String },
    /// Evaluate a formula and print its fixpoint trace.
    EvalFormula {
        system: PathBuf,
        formula: String,
        #[command(flatten)]
        eval: EvalArgs,
    },
}

struct Failure(u8, String);

type Outcome = Result<u8, Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure(USAGE, msg.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<SystemFile, Failure> {
    parse_system(&read(path)?).map_err(|e| usage(format!("{}:{e}", path.display())))
}

fn code(a: &Answer) -> u8 {
    a.exit_code() as u8
}

fn file_query(f: &SystemFile, problem: Problem) -> Result<QuerySpec, Failure> {
    let init = f.init.clone().ok_or_else(|| usage("system file has no `init` line"))?;
    if f.targets.is_empty() {
        return Err(usage("system file has no `target` line"));
    }
    Ok(QuerySpec {
        problem,
        init,
        targets: f.targets.clone(),
    })
}

fn init_and_targets(f: &SystemFile) -> Result<(Config, Vec<StateId>), Failure> {
    let q = file_query(f, Problem::ALL[0])?;
    Ok((q.init, q.targets))
}

fn run(cli: Cli) -> Outcome {
    match cli.cmd {
        Cmd::Classify { system } => {
            let f = load(&system)?;
            let c = f.system.classify();
            outln!("{}", class_line(&c));
            outln!("class: {}", SystemClass::of(&c));
            outln!("dimension: {}", f.system.dim());
            Ok(0)
        }
        Cmd::Check {
            system,
            query,
            problem,
            eval,
            cap,
            runs,
            seed,
        } => {
            let f = load(&system)?;
            let mut q = match &query {
                Some(p) => parse_query(&read(p)?, &f.system)
                    .map_err(|e| usage(format!("{}:{e}", p.display())))?,
                None => {
                    let p = problem.ok_or_else(|| usage("`--problem` is required without `--query`"))?;
                    file_query(&f, p)?
                }
            };
            if let Some(p) = problem {
                q.problem = p;
            }
            let opts = CheckOptions {
                eval: eval.options(),
                cap,
                runs,
                seed,
            };
            let v = check(&f.system, &q, &opts).map_err(usage)?;
            out!("{}", v.report());
            Ok(code(&v.answer))
        }
        Cmd::ReduceDim { system, all, trace } => {
            let f = load(&system)?;
            let (mut init, mut targets) = init_and_targets(&f)?;
            let mut sys = f.system;
            let mut labels = String::new();
            let steps = if all { sys.dim().max(1) } else { 1 };
            for i in 0..steps {
                let r = reduce_once(&sys, &init, &targets).map_err(usage)?;
                if steps > 1 {
                    labels.push_str(&format!("reduction {}\n", i + 1));
                }
                labels.push_str(&r.trace_text(&sys));
                sys = r.system;
                init = r.init;
                targets = r.targets;
            }
            out!("{}", serialize_system(&sys, Some(&init), &targets));
            match trace {
                Some(p) => fs::write(&p, labels).map_err(|e| usage(format!("{}: {e}", p.display())))?,
                None => labels.lines().for_each(|l| outln!("# {l}")),
            }
            Ok(0)
        }
        Cmd::EncodeMinsky { machine, figure } => {
            let m = MinskyMachine::parse(&read(&machine)?)
                .map_err(|e| usage(format!("{}: {e}", machine.display())))?;
            let fig = match figure {
                FigureArg::General => Figure::General,
                FigureArg::PvassDeadlock => Figure::PvassDeadlock,
                FigureArg::PvassDeadlockfree => Figure::PvassDeadlockFree,
            };
            let e = encode_with(&m, fig).map_err(usage)?;
            out!("{}", serialize_system(&e.system, Some(&e.init), &[e.target]));
            Ok(0)
        }
        Cmd::Simulate {
            system,
            runs,
            cap,
            seed,
            strategy,
        } => {
            if runs == 0 {
                return Err(usage("`--runs` must be at least 1"));
            }
            let f = load(&system)?;
            let (init, targets) = init_and_targets(&f)?;
            let (sys, strat) = match strategy {
                StrategyArg::Uniform => (f.system.clone(), StrategyHandle::Uniform),
                StrategyArg::Region => region_strategy(&f.system, &targets)?,
            };
            let freq = estimate_reach(&sys, &init, &strat, &targets, runs, cap, seed);
            let row = SimRecord {
                instance: system.display().to_string(),
                strategy: strat.label().to_string(),
                runs,
                cap,
                frequency: freq,
                seed,
            };
            write_csv(std::io::stdout(), &[row]).map_err(|e| Failure(2, e.to_string()))?;
            Ok(0)
        }
        Cmd::Oracle { system, problem, cap } => {
            let f = load(&system)?;
            let q = file_query(&f, problem)?;
            match bounded_oracle(&f.system, cap, problem, &q.init, &q.targets) {
                Ok(b) => {
                    let a = Answer::from_bool(b);
                    outln!("{a}");
                    Ok(code(&a))
                }
                Err(e) => {
                    outln!("UNKNOWN({e})");
                    Ok(2)
                }
            }
        }
        Cmd::GenGadget { name } => {
            let g = gen_gadget(&name).map_err(usage)?;
            out!("{}", serialize_system(&g.system, Some(&g.init), &g.targets));
            Ok(0)
        }
        Cmd::EvalFormula {
            system,
            formula,
            eval,
        } => {
            let f = load(&system)?;
            let phi = parse_formula(&formula, &f.system).map_err(usage)?;
            let e = mucalc::eval(&f.system, &phi, &Env::new(), &eval.options()).map_err(usage)?;
            outln!("formula: {}", phi.to_text(&f.system));
            outln!("exact: {}", e.exact);
            outln!("upper:");
            out!("{}", indent(&e.upper.serialize(&f.system)));
            if !e.exact {
                outln!("lower:");
                out!("{}", indent(&e.lower.serialize(&f.system)));
            }
            outln!("trace:");
            out!("{}", indent(&e.trace.render(&f.system)));
            match &f.init {
                None => Ok(0),
                Some(c) => {
                    let m = e.decide(c);
                    let (word, code) = match m {
                        Membership::Member => ("member", 0),
                        Membership::NotMember => ("not-member", 1),
                        Membership::Unknown => ("unknown", 2),
                    };
                    outln!("init: {word}");
                    Ok(code)
                }
            }
        }
    }
}

/// The rank strategy of almost-sure reachability on the deadlock-free
/// version of a 1-VASS-MDP, together with that system.
fn region_strategy(sys: &VassMdp, targets: &[StateId]) -> Result<(VassMdp, StrategyHandle), Failure> {
    let df = remove_deadlocks(sys).map_err(usage)?;
    let e = mucalc::v1_as(&df.system, targets, &EvalOptions::default()).map_err(usage)?;
    let trace = if e.exact { &e.trace } else { e.lower_trace.as_ref().unwrap_or(&e.trace) };
    let stages = trace
        .first_mu()
        .ok_or_else(|| Failure(2, "no least fixpoint to read a strategy from".into()))?;
    let s = extract_strategy(&df.system, stages, targets).map_err(|e| Failure(2, e.to_string()))?;
    Ok((df.system, StrategyHandle::Region(s)))
}

fn indent(s: &str) -> String {
    s.lines().map(|l| format!("  {l}\n")).collect()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(c) => ExitCode::from(c),
        Err(Failure(c, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(c)
        }
    }
}
