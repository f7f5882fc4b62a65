//! Small-step interleaving semantics, schedulers and trace production.

mod injector;
pub mod machine;
mod trace_io;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use injector::{check_injector_bodies, make_fake_injector, make_injector, BodyCheck, InjectorBodyVerdict};
pub use machine::{Config, Machine, Outcome};
pub use trace_io::{state_to_json, trace_records, trace_to_jsonl, value_to_json, TRACE_SCHEMA_VERSION};

use crate::domain::State;
use crate::eval::{eval_state_predicate, EvalError};
use crate::model::{ActorId, SystemSpec};
use crate::span::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransitionKind {
    ProcessStep,
    Injection,
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransitionKind::ProcessStep => "PROCESS_STEP",
            TransitionKind::Injection => "INJECTION",
        })
    }
}

/// One executed atomic unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub actor: ActorId,
    pub kind: TransitionKind,
    pub before: State,
    pub after: State,
    /// Source span of the executed unit.
    pub span: Span,
    /// Program counters of every process after the unit.
    pub pcs: Vec<usize>,
    /// Index of the chosen outcome when the unit is nondeterministic.
    pub outcome: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActorStatus {
    Terminated,
    Running,
    StepBoundHit,
    Faulted,
}

impl fmt::Display for ActorStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActorStatus::Terminated => "TERMINATED",
            ActorStatus::Running => "RUNNING",
            ActorStatus::StepBoundHit => "STEP_BOUND_HIT",
            ActorStatus::Faulted => "FAULTED",
        })
    }
}

/// An evaluation error that ended a trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fault {
    pub actor: ActorId,
    pub error: EvalError,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub initial: State,
    pub initial_pcs: Vec<usize>,
    pub transitions: Vec<Transition>,
    /// Final status of each process.
    pub status: Vec<ActorStatus>,
    pub fault: Option<Fault>,
}

impl Trace {
    /// The actor-choice sequence that identifies this trace.
    pub fn choices(&self) -> Vec<(ActorId, usize)> {
        self.transitions.iter().map(|t| (t.actor, t.outcome)).collect()
    }

    pub fn final_state(&self) -> &State {
        self.transitions.last().map_or(&self.initial, |t| &t.after)
    }

    pub fn hit_bound(&self) -> bool {
        self.status.contains(&ActorStatus::StepBoundHit)
    }

    pub fn terminated(&self) -> bool {
        self.status.iter().all(|s| *s == ActorStatus::Terminated)
    }

    pub fn injections(&self) -> usize {
        self.transitions.iter().filter(|t| t.kind == TransitionKind::Injection).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scheduler {
    RoundRobin,
    /// Seeded random choice. With probability `injector_weight` an enabled
    /// injector fires; otherwise a process is picked uniformly.
    Random {
        seed: u64,
        injector_weight: f64,
    },
    /// Used by [`run`] to select the first trace in enumeration order.
    Exhaustive {
        depth: usize,
    },
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum RuntimeError {
    #[error("initial state does not satisfy the init constraint")]
    InitViolated,
    #[error("initial state does not conform to the declaration")]
    NonConforming,
    #[error("more than {cap} traces; raise the cap or lower the depth")]
    CapExceeded { cap: usize },
    #[error("injector weight {0} is outside [0, 1]")]
    InvalidWeight(f64),
    #[error("step cap must be positive")]
    ZeroStepCap,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn check_initial(sys: &SystemSpec, initial: &State) -> Result<(), RuntimeError> {
    if !initial.conforms_to(&sys.decl) {
        return Err(RuntimeError::NonConforming);
    }
    if !eval_state_predicate(&sys.init, &sys.decl, initial)? {
        return Err(RuntimeError::InitViolated);
    }
    Ok(())
}

/// Builds traces step by step.
struct Recorder<'m, 'a> {
    m: &'m Machine<'a>,
    trace: Trace,
    config: Config,
}

impl<'m, 'a> Recorder<'m, 'a> {
    fn new(m: &'m Machine<'a>, initial: State) -> Self {
        let config = m.initial(initial.clone());
        let trace = Trace {
            initial,
            initial_pcs: config.pcs.clone(),
            transitions: Vec::new(),
            status: Vec::new(),
            fault: None,
        };
        Recorder { m, trace, config }
    }

    fn push(&mut self, actor: ActorId, outcome: usize, o: Outcome) {
        self.trace.transitions.push(Transition {
            actor,
            kind: o.kind,
            before: self.config.state.clone(),
            after: o.config.state.clone(),
            span: o.span,
            pcs: o.config.pcs.clone(),
            outcome,
        });
        self.config = o.config;
    }

    fn finish(mut self, fault: Option<Fault>) -> Trace {
        let np = self.m.sys.processes.len();
        self.trace.status = (0..np)
            .map(|p| {
                if self.m.is_terminated(&self.config, p) {
                    ActorStatus::Terminated
                } else if let Some(f) = &fault {
                    if f.actor.0 == p {
                        ActorStatus::Faulted
                    } else {
                        ActorStatus::Running
                    }
                } else {
                    ActorStatus::StepBoundHit
                }
            })
            .collect();
        self.trace.fault = fault;
        self.trace
    }
}

/// Rebuilds the trace identified by an actor-choice sequence.
pub fn replay(sys: &SystemSpec, initial: &State, choices: &[(ActorId, usize)]) -> Result<Trace, RuntimeError> {
    let m = Machine::new(sys);
    let mut rec = Recorder::new(&m, initial.clone());
    for &(actor, k) in choices {
        match m.enabled(&rec.config) {
            Err((a, error)) => return Ok(rec.finish(Some(Fault { actor: a, error }))),
            Ok(e) if !e.contains(&actor) => {
                return Err(RuntimeError::Unsupported(format!("actor {} is not enabled", actor.0)))
            }
            Ok(_) => {}
        }
        match m.step(&rec.config, actor) {
            Ok(mut outs) if k < outs.len() => {
                let o = outs.swap_remove(k);
                rec.push(actor, k, o);
            }
            Ok(_) => {
                return Err(RuntimeError::Unsupported(format!("choice {k} of actor {} is not available", actor.0)))
            }
            Err(error) => return Ok(rec.finish(Some(Fault { actor, error }))),
        }
    }
    Ok(rec.finish(None))
}

/// Interleaves actors under `sched` until every process terminates, a fault
/// occurs, or `step_cap` units have run.
pub fn run(sys: &SystemSpec, sched: &Scheduler, initial: &State, step_cap: usize) -> Result<Trace, RuntimeError> {
    check_initial(sys, initial)?;
    if step_cap == 0 {
        return Err(RuntimeError::ZeroStepCap);
    }
    let m = Machine::new(sys);
    let np = sys.processes.len();
    let mut rec = Recorder::new(&m, initial.clone());
    let (mut rng, weight, cap) = match sched {
        Scheduler::Random { seed, injector_weight } => {
            if !(0.0..=1.0).contains(injector_weight) {
                return Err(RuntimeError::InvalidWeight(*injector_weight));
            }
            (Some(ChaCha8Rng::seed_from_u64(*seed)), *injector_weight, step_cap)
        }
        Scheduler::Exhaustive { depth } => (None, 0.0, step_cap.min(*depth)),
        Scheduler::RoundRobin => (None, 0.0, step_cap),
    };
    let mut next_rr = 0usize;
    for _ in 0..cap {
        if m.all_terminated(&rec.config) {
            break;
        }
        let enabled = match m.enabled(&rec.config) {
            Ok(e) => e,
            Err((actor, error)) => return Ok(rec.finish(Some(Fault { actor, error }))),
        };
        let actor = match (sched, rng.as_mut()) {
            (Scheduler::Random { .. }, Some(rng)) => {
                let procs: Vec<ActorId> = enabled.iter().copied().filter(|a| a.0 < np).collect();
                let injs: Vec<ActorId> = enabled.iter().copied().filter(|a| a.0 >= np).collect();
                if !injs.is_empty() && rng.gen_bool(weight) {
                    injs[rng.gen_range(0..injs.len())]
                } else {
                    procs[rng.gen_range(0..procs.len())]
                }
            }
            (Scheduler::RoundRobin, _) => {
                let n = sys.actor_count();
                let a = (0..n)
                    .map(|k| ActorId((next_rr + k) % n))
                    .find(|a| enabled.contains(a))
                    .expect("a running process is always enabled");
                next_rr = (a.0 + 1) % n;
                a
            }
            _ => enabled[0],
        };
        match m.step(&rec.config, actor) {
            Ok(mut outs) => {
                let k = match rng.as_mut() {
                    Some(rng) if outs.len() > 1 => rng.gen_range(0..outs.len()),
                    _ => 0,
                };
                let o = outs.swap_remove(k);
                rec.push(actor, k, o);
            }
            Err(error) => return Ok(rec.finish(Some(Fault { actor, error }))),
        }
    }
    Ok(rec.finish(None))
}

/// Default bound on the number of traces [`enumerate_traces`] may produce.
pub const DEFAULT_TRACE_CAP: usize = 1_000_000;

/// Every interleaving of at most `depth` units, including every injector
/// firing within budget. Once all processes have terminated a trace may end
/// or continue with further injections.
pub fn enumerate_traces(
    sys: &SystemSpec,
    initial: &State,
    depth: usize,
    cap: usize,
) -> Result<Vec<Trace>, RuntimeError> {
    check_initial(sys, initial)?;
    let m = Machine::new(sys);
    let mut out = Vec::new();
    let mut rec = Recorder::new(&m, initial.clone());
    enumerate_from(&m, &mut rec, depth, cap, &mut out)?;
    Ok(out)
}

fn enumerate_from(
    m: &Machine<'_>,
    rec: &mut Recorder<'_, '_>,
    depth: usize,
    cap: usize,
    out: &mut Vec<Trace>,
) -> Result<(), RuntimeError> {
    let emit = |rec: &Recorder<'_, '_>, fault: Option<Fault>, out: &mut Vec<Trace>| {
        if out.len() >= cap {
            return Err(RuntimeError::CapExceeded { cap });
        }
        let snapshot = Recorder { m: rec.m, trace: rec.trace.clone(), config: rec.config.clone() };
        out.push(snapshot.finish(fault));
        Ok(())
    };
    let done = m.all_terminated(&rec.config);
    if done {
        emit(rec, None, out)?;
    }
    let steps = rec.trace.transitions.len();
    if steps >= depth {
        if !done {
            emit(rec, None, out)?;
        }
        return Ok(());
    }
    let enabled = match m.enabled(&rec.config) {
        Ok(e) => e,
        Err((actor, error)) => return emit(rec, Some(Fault { actor, error }), out),
    };
    let saved = rec.config.clone();
    for actor in enabled {
        match m.step(&saved, actor) {
            Ok(outs) => {
                for (k, o) in outs.into_iter().enumerate() {
                    rec.push(actor, k, o);
                    enumerate_from(m, rec, depth, cap, out)?;
                    rec.trace.transitions.pop();
                    rec.config = saved.clone();
                }
            }
            Err(error) => emit(rec, Some(Fault { actor, error }), out)?,
        }
    }
    Ok(())
}
