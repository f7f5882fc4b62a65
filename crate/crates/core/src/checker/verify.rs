//! Whole-system verification over a set of initial states and a schedule strategy.

use thiserror::Error;

use crate::domain::State;
use crate::eval::eval_state_predicate;
use crate::model::SystemSpec;
use crate::runtime::{replay, run, Machine, RuntimeError, Scheduler, Trace};

use super::explore::{explore, Choice, Exploration, NFLAGS};
use super::{check_trace, holds, CheckError, CheckOptions, Flag, Flags, Report, MAX_LAYERS};

/// Stack for the recursive explorer; its depth grows with the depth bound.
const EXPLORER_STACK: usize = 512 << 20;

#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    /// Every interleaving and injection of at most `depth` units.
    Exhaustive {
        depth: usize,
    },
    /// `runs` seeded random schedules per initial state, with seeds `seed`, `seed + 1`, ...
    Random {
        runs: usize,
        seed: u64,
        weight: f64,
        step_cap: usize,
    },
    RoundRobin {
        step_cap: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub strict: bool,
    /// Most memoized subtrees per initial state before exploration stops as incomplete.
    pub node_cap: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { strict: false, node_cap: 4_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Incomplete,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Incomplete => "INCOMPLETE",
        })
    }
}

/// The first trace observed with `flag`, with its full check.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub flag: Flag,
    pub trace: Trace,
    pub report: Report,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub strategy: Strategy,
    pub strict: bool,
    /// Initial states whose traces were checked.
    pub initial_states: usize,
    /// Initial states where some precondition fails; nothing is owed there.
    pub skipped_pre_failed: usize,
    pub traces: u128,
    /// Traces per flag. For `LIVELOCK` it counts initial states with a fair cycle.
    pub flag_counts: Vec<(Flag, u128)>,
    pub flags: Flags,
    /// Distinct configurations reached by exhaustive exploration.
    pub configurations: usize,
    pub outcome: Outcome,
    /// First witness per observed flag other than `ALL_PASS`, in flag order.
    pub witnesses: Vec<Counterexample>,
}

impl VerifyReport {
    /// The witness of the first failing flag, in the order
    /// `GUARANTEE_BROKEN`, `POST_FAILED`, `LIVELOCK`, `FAULTED`.
    pub fn counterexample(&self) -> Option<&Counterexample> {
        Flag::FAILING.iter().find_map(|f| self.witnesses.iter().find(|w| w.flag == *f))
    }

    /// Witnesses of every failing flag, in the order of [`Flag::FAILING`].
    pub fn counterexamples(&self) -> Vec<&Counterexample> {
        Flag::FAILING.iter().filter_map(|f| self.witnesses.iter().find(|w| w.flag == *f)).collect()
    }

    pub fn count(&self, f: Flag) -> u128 {
        self.flag_counts.iter().find(|(g, _)| *g == f).map_or(0, |(_, n)| *n)
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("initial state {0} does not satisfy the init constraint")]
    InitViolated(String),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Check(#[from] CheckError),
}

enum Found {
    Choices(State, Vec<Choice>),
    Trace(Trace, Report),
}

struct Tally {
    traces: u128,
    counts: [u128; NFLAGS],
    found: Vec<Option<Found>>,
    configurations: usize,
    incomplete: bool,
}

impl Tally {
    fn flag(&mut self, f: Flag, n: u128, found: impl FnOnce() -> Found) {
        let i = f as usize;
        self.counts[i] = self.counts[i].saturating_add(n);
        if n > 0 && self.found[i].is_none() {
            self.found[i] = Some(found());
        }
    }
}

fn explore_on_big_stack(m: &Machine<'_>, s: &State, depth: usize, opts: VerifyOptions) -> Option<Exploration> {
    std::thread::scope(|scope| {
        std::thread::Builder::new()
            .stack_size(EXPLORER_STACK)
            .spawn_scoped(scope, || explore(m, s, depth, opts.node_cap, opts.strict).ok())
            .expect("explorer thread starts")
            .join()
            .expect("explorer does not panic")
    })
}

/// Checks every trace the strategy produces from each initial state.
///
/// The result passes when no trace breaks a guarantee, fails a post, faults
/// while owing its contract, or livelocks. Initial states where a
/// precondition fails are skipped and counted.
pub fn verify_system(
    sys: &SystemSpec,
    strategy: &Strategy,
    initial: &[State],
    opts: VerifyOptions,
) -> Result<VerifyReport, VerifyError> {
    for p in &sys.processes {
        if p.layers.len() > MAX_LAYERS {
            return Err(CheckError::TooManyLayers { process: p.id.clone(), layers: p.layers.len() }.into());
        }
    }
    for s in initial {
        if !s.conforms_to(&sys.decl) {
            return Err(RuntimeError::NonConforming.into());
        }
        if !eval_state_predicate(&sys.init, &sys.decl, s).map_err(RuntimeError::from)? {
            return Err(VerifyError::InitViolated(s.display(&sys.decl).to_string()));
        }
    }
    let check = CheckOptions { strict: opts.strict };
    let m = Machine::new(sys);
    let mut t = Tally {
        traces: 0,
        counts: [0; NFLAGS],
        found: (0..NFLAGS).map(|_| None).collect(),
        configurations: 0,
        incomplete: false,
    };
    let (mut checked, mut skipped) = (0usize, 0usize);
    for s in initial {
        if !sys.processes.iter().all(|p| holds(&p.pre, sys, s, s)) {
            skipped += 1;
            continue;
        }
        match strategy {
            Strategy::Exhaustive { depth } => {
                let Some(ex) = explore_on_big_stack(&m, s, *depth, opts) else {
                    t.incomplete = true;
                    break;
                };
                checked += 1;
                t.traces = t.traces.saturating_add(ex.traces);
                t.configurations += ex.configurations;
                for f in Flag::ALL {
                    let w = &ex.witness[f as usize];
                    t.flag(f, ex.counts[f as usize], || Found::Choices(s.clone(), w.clone().unwrap_or_default()));
                }
                if let Some(cycle) = ex.livelock {
                    t.flag(Flag::Livelock, 1, || Found::Choices(s.clone(), cycle));
                }
            }
            Strategy::Random { runs, seed, weight, step_cap } => {
                checked += 1;
                for k in 0..*runs {
                    let sched = Scheduler::Random { seed: seed.wrapping_add(k as u64), injector_weight: *weight };
                    let trace = run(sys, &sched, s, *step_cap)?;
                    record(&mut t, sys, trace, check)?;
                }
            }
            Strategy::RoundRobin { step_cap } => {
                checked += 1;
                let trace = run(sys, &Scheduler::RoundRobin, s, *step_cap)?;
                record(&mut t, sys, trace, check)?;
            }
        }
    }

    let mut witnesses = Vec::new();
    for f in Flag::ALL.into_iter().filter(|f| *f != Flag::AllPass) {
        let Some(found) = t.found[f as usize].take() else {
            continue;
        };
        let (trace, report) = match found {
            Found::Trace(trace, report) => (trace, report),
            Found::Choices(s, choices) => {
                let trace = replay(sys, &s, &choices)?;
                let report = check_trace(&trace, sys, check)?;
                (trace, report)
            }
        };
        witnesses.push(Counterexample { flag: f, trace, report });
    }
    let mut flags: Flags = Flag::ALL.into_iter().filter(|f| t.counts[*f as usize] > 0).collect();
    if t.incomplete {
        flags.insert(Flag::Incomplete);
    }
    let flags = flags.settle();
    let outcome = if flags.any_failing() {
        Outcome::Fail
    } else if t.incomplete {
        Outcome::Incomplete
    } else {
        Outcome::Pass
    };
    Ok(VerifyReport {
        strategy: strategy.clone(),
        strict: opts.strict,
        initial_states: checked,
        skipped_pre_failed: skipped,
        traces: t.traces,
        flag_counts: Flag::ALL.into_iter().map(|f| (f, t.counts[f as usize])).filter(|(_, n)| *n > 0).collect(),
        flags,
        configurations: t.configurations,
        outcome,
        witnesses,
    })
}

fn record(t: &mut Tally, sys: &SystemSpec, trace: Trace, check: CheckOptions) -> Result<(), VerifyError> {
    let report = check_trace(&trace, sys, check)?;
    t.traces = t.traces.saturating_add(1);
    for f in report.flags.iter() {
        t.flag(f, 1, || Found::Trace(trace.clone(), report.clone()));
    }
    Ok(())
}
