//! Trace verification: per-transition rely/guarantee verdicts, pre and post
//! verdicts, active-layer assignment, livelock detection and whole-system
//! verification.
//!
//! A process owes its guarantee and postcondition only while its
//! precondition held and some layer's rely held on every environment
//! transition of its lifetime. Once every layer's rely is broken, later
//! verdicts are reported as vacuous. `strict` keeps checking regardless.

mod explore;
mod monitor;
mod report_io;
mod verify;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::domain::State;
use crate::eval::eval_predicate;
use crate::expr::Expr;
use crate::model::{ActorId, SystemSpec};
use crate::runtime::{ActorStatus, Config, Machine, Trace, TransitionKind};
use crate::span::Span;

pub use report_io::{
    report_to_json, report_to_text, trace_to_text, verify_to_json, verify_to_text, REPORT_SCHEMA_VERSION,
};
pub use verify::{verify_system, Counterexample, Outcome, Strategy, VerifyError, VerifyOptions, VerifyReport};

/// Most layers a process may declare; layer sets are tracked as bitmasks.
pub const MAX_LAYERS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Holds,
    Fails,
    /// Not owed: the precondition failed or every rely was broken.
    Vacuous,
    /// The process did not terminate in this trace.
    NotReached,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "HOLDS",
            Verdict::Fails => "FAILS",
            Verdict::Vacuous => "VACUOUS",
            Verdict::NotReached => "NOT_REACHED",
        })
    }
}

impl Verdict {
    fn of(b: bool) -> Verdict {
        if b {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flag {
    AllPass,
    RelyBroken,
    GuaranteeBroken,
    PostFailed,
    Livelock,
    Faulted,
    PreFailed,
    StepBoundHit,
    Incomplete,
}

impl Flag {
    pub const ALL: [Flag; 9] = [
        Flag::AllPass,
        Flag::RelyBroken,
        Flag::GuaranteeBroken,
        Flag::PostFailed,
        Flag::Livelock,
        Flag::Faulted,
        Flag::PreFailed,
        Flag::StepBoundHit,
        Flag::Incomplete,
    ];

    /// Flags that make a check fail.
    pub const FAILING: [Flag; 4] = [Flag::GuaranteeBroken, Flag::PostFailed, Flag::Livelock, Flag::Faulted];

    pub fn name(self) -> &'static str {
        match self {
            Flag::AllPass => "ALL_PASS",
            Flag::RelyBroken => "RELY_BROKEN",
            Flag::GuaranteeBroken => "GUARANTEE_BROKEN",
            Flag::PostFailed => "POST_FAILED",
            Flag::Livelock => "LIVELOCK",
            Flag::Faulted => "FAULTED",
            Flag::PreFailed => "PRE_FAILED",
            Flag::StepBoundHit => "STEP_BOUND_HIT",
            Flag::Incomplete => "INCOMPLETE",
        }
    }

    pub fn is_failing(self) -> bool {
        Flag::FAILING.contains(&self)
    }

    fn bit(self) -> u16 {
        1 << self as u16
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of flags.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Flags(u16);

impl Flags {
    pub fn contains(self, f: Flag) -> bool {
        self.0 & f.bit() != 0
    }

    pub fn insert(&mut self, f: Flag) {
        self.0 |= f.bit();
    }

    pub fn remove(&mut self, f: Flag) {
        self.0 &= !f.bit();
    }

    pub fn union(self, o: Flags) -> Flags {
        Flags(self.0 | o.0)
    }

    pub fn iter(self) -> impl Iterator<Item = Flag> {
        Flag::ALL.into_iter().filter(move |f| self.contains(*f))
    }

    pub fn any_failing(self) -> bool {
        Flag::FAILING.iter().any(|f| self.contains(*f))
    }

    /// Sets `ALL_PASS` exactly when no rely was broken and nothing failed.
    fn settle(mut self) -> Flags {
        if self.any_failing() || self.contains(Flag::RelyBroken) {
            self.remove(Flag::AllPass);
        } else {
            self.insert(Flag::AllPass);
        }
        self
    }
}

impl FromIterator<Flag> for Flags {
    fn from_iter<I: IntoIterator<Item = Flag>>(it: I) -> Self {
        let mut f = Flags::default();
        for x in it {
            f.insert(x);
        }
        f
    }
}

impl fmt::Display for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(Flag::name).collect();
        f.write_str(&names.join(" "))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckOptions {
    /// Keep checking guarantees, posts and faults after a rely is broken or a pre fails.
    pub strict: bool,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("trace does not match the system declaration: {0}")]
    DeclarationMismatch(String),
    #[error("unknown process `{0}`")]
    UnknownProcess(String),
    #[error("process `{process}` has {layers} layers; at most {MAX_LAYERS} are supported")]
    TooManyLayers { process: String, layers: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelyVerdict {
    pub process: usize,
    /// Layer whose rely was evaluated.
    pub layer: usize,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionVerdict {
    pub index: usize,
    pub actor: ActorId,
    /// The actor's guarantee: the injector's, or the process's relevant layer.
    pub guarantee: Verdict,
    /// Rely verdicts of every other process still running before the transition.
    pub relies: Vec<RelyVerdict>,
    /// Span of the first failing predicate.
    pub violated: Option<Span>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessVerdict {
    pub process: String,
    pub pre: Verdict,
    /// Lowest layer whose rely held on every environment transition of the
    /// process's lifetime; `None` when every layer's rely was broken.
    pub active_layer: Option<usize>,
    /// When every rely broke: the layer that broke last and the transition index.
    pub broken_at: Option<(usize, usize)>,
    /// Aggregate over the process's own transitions.
    pub guarantee: Verdict,
    pub post: Verdict,
    pub status: ActorStatus,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub transitions: Vec<TransitionVerdict>,
    pub processes: Vec<ProcessVerdict>,
    pub flags: Flags,
}

impl Report {
    pub fn passed(&self) -> bool {
        !self.flags.any_failing()
    }
}

pub(crate) fn holds(e: &Expr, sys: &SystemSpec, before: &State, after: &State) -> bool {
    eval_predicate(e, &sys.decl, before, after).unwrap_or(false)
}

fn check_shape(trace: &Trace, sys: &SystemSpec) -> Result<(), CheckError> {
    let bad = |m: String| Err(CheckError::DeclarationMismatch(m));
    for p in &sys.processes {
        if p.layers.len() > MAX_LAYERS {
            return Err(CheckError::TooManyLayers { process: p.id.clone(), layers: p.layers.len() });
        }
    }
    if !trace.initial.conforms_to(&sys.decl) {
        return bad("initial state".into());
    }
    let np = sys.processes.len();
    if trace.status.len() != np || trace.initial_pcs.len() != np {
        return bad(format!("trace has {} processes, system has {np}", trace.status.len()));
    }
    let mut prev = &trace.initial;
    for (i, t) in trace.transitions.iter().enumerate() {
        if t.actor.0 >= sys.actor_count() {
            return bad(format!("transition {i} names actor {}", t.actor.0));
        }
        if t.before != *prev || !t.after.conforms_to(&sys.decl) || t.pcs.len() != np {
            return bad(format!("transition {i}"));
        }
        let is_inj = t.kind == TransitionKind::Injection;
        if is_inj != sys.is_injector(t.actor) {
            return bad(format!("transition {i} has the wrong kind"));
        }
        prev = &t.after;
    }
    Ok(())
}

/// Number of transitions in the lifetime of each process: environment
/// transitions with a smaller index happen while it runs.
fn lifetimes(trace: &Trace, m: &Machine<'_>) -> Vec<usize> {
    (0..m.sys.processes.len())
        .map(|p| {
            if trace.initial_pcs[p] >= m.code_len(p) {
                return 0;
            }
            trace.transitions.iter().position(|t| t.pcs[p] >= m.code_len(p)).unwrap_or(trace.transitions.len())
        })
        .collect()
}

struct LayerAnalysis {
    active: Option<usize>,
    /// Layer that broke last and the index where it broke.
    broken: Option<(usize, usize)>,
}

impl LayerAnalysis {
    /// Layer whose guarantee and post are owed.
    fn owed(&self) -> usize {
        self.active.or(self.broken.map(|b| b.0)).unwrap_or(0)
    }
}

fn analyse_layers(trace: &Trace, sys: &SystemSpec, p: usize, lifetime: usize) -> LayerAnalysis {
    let ps = &sys.processes[p];
    let first_fail: Vec<Option<usize>> = ps
        .layers
        .iter()
        .map(|l| {
            trace.transitions[..lifetime]
                .iter()
                .enumerate()
                .find(|(_, t)| t.actor.0 != p && !holds(&l.rely, sys, &t.before, &t.after))
                .map(|(i, _)| i)
        })
        .collect();
    let active = first_fail.iter().position(Option::is_none);
    let broken = if active.is_none() {
        first_fail.iter().enumerate().filter_map(|(l, f)| f.map(|i| (l, i))).max_by_key(|&(l, i)| (i, l))
    } else {
        None
    };
    LayerAnalysis { active, broken }
}

/// The lowest layer whose rely held on every environment transition of the
/// lifetime of `pid`, or `None` when every layer's rely was broken.
pub fn active_layer(trace: &Trace, sys: &SystemSpec, pid: &str) -> Result<Option<usize>, CheckError> {
    let p = sys.process_index(pid).ok_or_else(|| CheckError::UnknownProcess(pid.to_string()))?;
    check_shape(trace, sys)?;
    let m = Machine::new(sys);
    let life = lifetimes(trace, &m);
    Ok(analyse_layers(trace, sys, p, life[p]).active)
}

/// Checks every transition of `trace` against the conditions of `sys`.
pub fn check_trace(trace: &Trace, sys: &SystemSpec, opts: CheckOptions) -> Result<Report, CheckError> {
    check_shape(trace, sys)?;
    let m = Machine::new(sys);
    let np = sys.processes.len();
    let life = lifetimes(trace, &m);
    let pre_ok: Vec<bool> = sys.processes.iter().map(|p| holds(&p.pre, sys, &trace.initial, &trace.initial)).collect();
    let layers: Vec<LayerAnalysis> = (0..np).map(|p| analyse_layers(trace, sys, p, life[p])).collect();
    // Whether the obligations of `p` have lapsed by transition `t`.
    let lapsed = |p: usize, t: usize| !opts.strict && (!pre_ok[p] || layers[p].broken.is_some_and(|(_, at)| t >= at));

    let mut transitions = Vec::with_capacity(trace.transitions.len());
    let mut own_fail = vec![false; np];
    let mut own_vacuous = vec![false; np];
    let mut injector_fail = false;
    for (index, t) in trace.transitions.iter().enumerate() {
        let mut violated = None;
        let guarantee = if sys.is_injector(t.actor) {
            let g = &sys.injectors[t.actor.0 - np].guarantee;
            let v = Verdict::of(holds(g, sys, &t.before, &t.after));
            if v == Verdict::Fails {
                injector_fail = true;
                violated = Some(g.span);
            }
            v
        } else {
            let p = t.actor.0;
            if lapsed(p, index) {
                own_vacuous[p] = true;
                Verdict::Vacuous
            } else {
                let g = &sys.processes[p].layers[layers[p].owed()].guarantee;
                let v = Verdict::of(holds(g, sys, &t.before, &t.after));
                if v == Verdict::Fails {
                    own_fail[p] = true;
                    violated = Some(g.span);
                }
                v
            }
        };
        let mut relies = Vec::new();
        for q in (0..np).filter(|&q| q != t.actor.0 && index < life[q]) {
            let layer = layers[q].owed();
            let after_break = layers[q].broken.is_some_and(|(_, at)| index > at);
            let verdict = if after_break && !opts.strict {
                Verdict::Vacuous
            } else {
                let r = &sys.processes[q].layers[layer].rely;
                let v = Verdict::of(holds(r, sys, &t.before, &t.after));
                if v == Verdict::Fails && violated.is_none() {
                    violated = Some(r.span);
                }
                v
            };
            relies.push(RelyVerdict { process: q, layer, verdict });
        }
        transitions.push(TransitionVerdict { index, actor: t.actor, guarantee, relies, violated });
    }

    let mut flags = Flags::default();
    let mut processes = Vec::with_capacity(np);
    for (p, ps) in sys.processes.iter().enumerate() {
        let la = &layers[p];
        let status = trace.status[p];
        let post = if status != ActorStatus::Terminated {
            Verdict::NotReached
        } else if !opts.strict && (!pre_ok[p] || la.active.is_none()) {
            Verdict::Vacuous
        } else {
            let at =
                if trace.initial_pcs[p] >= m.code_len(p) { &trace.initial } else { &trace.transitions[life[p]].after };
            Verdict::of(holds(&ps.post(la.owed()), sys, at, at))
        };
        let guarantee = if own_fail[p] {
            Verdict::Fails
        } else if own_vacuous[p] {
            Verdict::Vacuous
        } else {
            Verdict::Holds
        };
        if !pre_ok[p] {
            flags.insert(Flag::PreFailed);
        }
        if la.active.is_none() {
            flags.insert(Flag::RelyBroken);
        }
        if own_fail[p] {
            flags.insert(Flag::GuaranteeBroken);
        }
        if post == Verdict::Fails {
            flags.insert(Flag::PostFailed);
        }
        processes.push(ProcessVerdict {
            process: ps.id.clone(),
            pre: Verdict::of(pre_ok[p]),
            active_layer: la.active,
            broken_at: la.broken,
            guarantee,
            post,
            status,
        });
    }
    if injector_fail {
        flags.insert(Flag::GuaranteeBroken);
    }
    if let Some(f) = &trace.fault {
        let owed = if sys.is_injector(f.actor) {
            true
        } else {
            opts.strict || (pre_ok[f.actor.0] && layers[f.actor.0].active.is_some())
        };
        if owed {
            flags.insert(Flag::Faulted);
        }
    }
    if trace.hit_bound() {
        flags.insert(Flag::StepBoundHit);
        let vacuous: Vec<bool> = (0..np).map(|p| !pre_ok[p] || layers[p].active.is_none()).collect();
        if livelock_in(trace, &m, &vacuous) {
            flags.insert(Flag::Livelock);
        }
    }
    Ok(Report { transitions, processes, flags: flags.settle() })
}

/// Whether a step-bounded trace revisits a configuration (control state,
/// shared state, injector usage and step history) with every running process
/// moving in between. A plain cap hit without such a repetition is not a
/// livelock.
pub fn detect_livelock(trace: &Trace, sys: &SystemSpec) -> bool {
    if !trace.hit_bound() || check_shape(trace, sys).is_err() {
        return false;
    }
    livelock_in(trace, &Machine::new(sys), &vec![false; sys.processes.len()])
}

/// `vacuous[p]` marks processes that owe nothing; a cycle in which only
/// such processes run is not reported.
fn livelock_in(trace: &Trace, m: &Machine<'_>, vacuous: &[bool]) -> bool {
    let np = m.sys.processes.len();
    let decl = &m.sys.decl;
    let mut pcs = trace.initial_pcs.clone();
    let mut state = trace.initial.clone();
    let mut injections = vec![0u32; m.sys.injectors.len()];
    let mut history = if m.uses_history() { vec![0i64; decl.len()] } else { Vec::new() };
    // moves[k][p]: steps of process p among the first k transitions.
    let mut moves = vec![vec![0usize; np]];
    let mut seen: HashMap<Config, Vec<usize>> = HashMap::new();
    seen.entry(Config {
        pcs: pcs.clone(),
        state: state.clone(),
        injections: injections.clone(),
        history: history.clone(),
    })
    .or_default()
    .push(0);
    for (k, t) in trace.transitions.iter().enumerate() {
        let mut mv = moves[k].clone();
        if t.kind == TransitionKind::Injection {
            injections[t.actor.0 - np] += 1;
        } else {
            mv[t.actor.0] += 1;
            if m.uses_history() {
                for slot in t.before.diff(&t.after) {
                    if let (Some(a), Some(b)) = (t.before.get(slot).as_int(), t.after.get(slot).as_int()) {
                        history[slot] = b - a;
                    }
                }
            }
        }
        moves.push(mv);
        pcs.clone_from(&t.pcs);
        state.clone_from(&t.after);
        let at = k + 1;
        let earlier = seen
            .entry(Config {
                pcs: pcs.clone(),
                state: state.clone(),
                injections: injections.clone(),
                history: history.clone(),
            })
            .or_default();
        for &i in earlier.iter() {
            let running: Vec<usize> = (0..np).filter(|&p| pcs[p] < m.code_len(p)).collect();
            let fair = running.iter().all(|&p| moves[at][p] > moves[i][p]);
            let owed = running.iter().any(|&p| !vacuous[p]);
            if !running.is_empty() && fair && owed {
                return true;
            }
        }
        earlier.push(at);
    }
    false
}
