//! Small-step machine: compiled control flow plus atomic execution of units.

use crate::domain::{Decl, State, Value};
use crate::eval::{Env, EvalError, EvalErrorKind};
use crate::expr::{Builtin, Expr, ExprKind};
use crate::model::{ActorId, Atomicity, SystemSpec};
use crate::program::{Stmt, StmtKind};
use crate::span::Span;

use super::TransitionKind;

/// Loop iterations one atomic unit may run before it is reported as divergent.
pub const ATOMIC_FUEL: u32 = 100_000;

/// Outcomes one atomic unit may produce before execution gives up.
pub const MAX_OUTCOMES: usize = 100_000;

#[derive(Clone, Debug)]
enum Instr {
    /// Runs the statement to completion as one unit.
    Unit(Stmt),
    /// Evaluates a guard as one unit; falls through when true.
    Guard { cond: Expr, on_false: usize },
    /// Control-only jump; never a unit.
    Jump(usize),
    /// One loop iteration (guard plus whole body) as one unit.
    Iter { cond: Expr, body: Vec<Stmt>, span: Span },
}

fn compile_stmts(stmts: &[Stmt], out: &mut Vec<Instr>) {
    for s in stmts {
        match &s.kind {
            StmtKind::While { cond, body } => {
                let head = out.len();
                out.push(Instr::Guard { cond: cond.clone(), on_false: usize::MAX });
                compile_stmts(body, out);
                out.push(Instr::Jump(head));
                let end = out.len();
                out[head] = Instr::Guard { cond: cond.clone(), on_false: end };
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let head = out.len();
                out.push(Instr::Guard { cond: cond.clone(), on_false: usize::MAX });
                compile_stmts(then_branch, out);
                let jump = out.len();
                out.push(Instr::Jump(usize::MAX));
                let else_start = out.len();
                compile_stmts(else_branch, out);
                let end = out.len();
                out[head] = Instr::Guard { cond: cond.clone(), on_false: else_start };
                out[jump] = Instr::Jump(end);
            }
            _ => out.push(Instr::Unit(s.clone())),
        }
    }
}

fn compile(stmts: &[Stmt], atomicity: Atomicity) -> Vec<Instr> {
    match atomicity {
        Atomicity::Statement => {
            let mut out = Vec::new();
            compile_stmts(stmts, &mut out);
            out
        }
        Atomicity::Block => stmts
            .iter()
            .map(|s| match &s.kind {
                StmtKind::While { cond, body } => Instr::Iter { cond: cond.clone(), body: body.clone(), span: s.span },
                _ => Instr::Unit(s.clone()),
            })
            .collect(),
    }
}

/// A global configuration: control state, shared state and injector usage.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    /// Program counter per process; `len` of its code means terminated.
    pub pcs: Vec<usize>,
    pub state: State,
    /// Firings used per injector.
    pub injections: Vec<u32>,
    /// Per-slot delta of the last process step that changed the slot.
    /// Empty unless some expression reads `last_delta`.
    pub history: Vec<i64>,
}

/// One possible result of executing a unit.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub config: Config,
    pub span: Span,
    pub kind: TransitionKind,
}

/// A system compiled for execution.
pub struct Machine<'a> {
    pub sys: &'a SystemSpec,
    code: Vec<Vec<Instr>>,
    uses_history: bool,
}

pub(crate) fn reads_history(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |n| {
        if matches!(n.kind, ExprKind::Call { f: Builtin::LastDelta, .. }) {
            found = true;
        }
    });
    found
}

impl<'a> Machine<'a> {
    pub fn new(sys: &'a SystemSpec) -> Self {
        let code = sys.processes.iter().map(|p| compile(&p.body.stmts, sys.atomicity)).collect();
        let uses_history = sys
            .injectors
            .iter()
            .any(|i| reads_history(&i.enabling) || i.body.expressions().into_iter().any(reads_history));
        Machine { sys, code, uses_history }
    }

    pub fn decl(&self) -> &'a Decl {
        &self.sys.decl
    }

    fn normalize(&self, p: usize, mut pc: usize) -> usize {
        let mut hops = 0;
        while let Some(Instr::Jump(t)) = self.code[p].get(pc) {
            pc = *t;
            hops += 1;
            if hops > self.code[p].len() {
                break;
            }
        }
        pc
    }

    pub fn initial(&self, state: State) -> Config {
        Config {
            pcs: (0..self.code.len()).map(|p| self.normalize(p, 0)).collect(),
            history: if self.uses_history { vec![0; state.0.len()] } else { Vec::new() },
            state,
            injections: vec![0; self.sys.injectors.len()],
        }
    }

    /// Number of instructions of process `p`; a pc at or past it means terminated.
    pub fn code_len(&self, p: usize) -> usize {
        self.code[p].len()
    }

    /// Whether configurations carry step history.
    pub fn uses_history(&self) -> bool {
        self.uses_history
    }

    pub fn is_terminated(&self, c: &Config, p: usize) -> bool {
        c.pcs[p] >= self.code[p].len()
    }

    pub fn all_terminated(&self, c: &Config) -> bool {
        (0..self.code.len()).all(|p| self.is_terminated(c, p))
    }

    fn history<'c>(&self, c: &'c Config) -> Option<&'c [i64]> {
        self.uses_history.then_some(c.history.as_slice())
    }

    /// Whether injector `i` may fire in `c`. An error in the enabling condition is reported.
    pub fn injector_enabled(&self, c: &Config, i: usize) -> Result<bool, EvalError> {
        let inj = &self.sys.injectors[i];
        if c.injections[i] >= inj.budget {
            return Ok(false);
        }
        let env = Env { decl: self.decl(), before: &c.state, after: &c.state, history: self.history(c) };
        env.eval_bool(&inj.enabling)
    }

    /// Actors that may move in `c`, in actor order.
    pub fn enabled(&self, c: &Config) -> Result<Vec<ActorId>, (ActorId, EvalError)> {
        let np = self.code.len();
        let mut out: Vec<ActorId> = (0..np).filter(|&p| !self.is_terminated(c, p)).map(ActorId).collect();
        for i in 0..self.sys.injectors.len() {
            match self.injector_enabled(c, i) {
                Ok(true) => out.push(ActorId(np + i)),
                Ok(false) => {}
                Err(e) => return Err((ActorId(np + i), e)),
            }
        }
        Ok(out)
    }

    /// Executes one unit of `actor`. Returns every possible outcome, in a fixed order.
    pub fn step(&self, c: &Config, actor: ActorId) -> Result<Vec<Outcome>, EvalError> {
        let np = self.code.len();
        if actor.0 >= np {
            return self.fire(c, actor.0 - np);
        }
        let p = actor.0;
        let instr = &self.code[p][c.pcs[p]];
        let (states, next_pc, span) = match instr {
            Instr::Unit(s) => {
                let states = exec_block(self.decl(), std::slice::from_ref(s), &c.state, None)?;
                (states, c.pcs[p] + 1, s.span)
            }
            Instr::Guard { cond, on_false } => {
                let b = Env::single(self.decl(), &c.state).eval_bool(cond)?;
                (vec![c.state.clone()], if b { c.pcs[p] + 1 } else { *on_false }, cond.span)
            }
            Instr::Iter { cond, body, span } => {
                if Env::single(self.decl(), &c.state).eval_bool(cond)? {
                    (exec_block(self.decl(), body, &c.state, None)?, c.pcs[p], *span)
                } else {
                    (vec![c.state.clone()], c.pcs[p] + 1, cond.span)
                }
            }
            Instr::Jump(_) => unreachable!("program counters are normalized past jumps"),
        };
        let next_pc = self.normalize(p, next_pc);
        Ok(states
            .into_iter()
            .map(|s| {
                let mut config = c.clone();
                if self.uses_history {
                    for slot in c.state.diff(&s) {
                        if let (Value::Int(a), Value::Int(b)) = (c.state.get(slot), s.get(slot)) {
                            config.history[slot] = b - a;
                        }
                    }
                }
                config.state = s;
                config.pcs[p] = next_pc;
                Outcome { config, span, kind: TransitionKind::ProcessStep }
            })
            .collect())
    }

    fn fire(&self, c: &Config, i: usize) -> Result<Vec<Outcome>, EvalError> {
        let inj = &self.sys.injectors[i];
        let states = exec_block(self.decl(), &inj.body.stmts, &c.state, self.history(c))?;
        Ok(states
            .into_iter()
            .map(|s| {
                let mut config = c.clone();
                config.state = s;
                config.injections[i] += 1;
                Outcome { config, span: inj.body.span, kind: TransitionKind::Injection }
            })
            .collect())
    }
}

/// Runs statements to completion over every nondeterministic choice.
/// Outcomes are deduplicated, keeping first occurrence order.
pub fn exec_block(decl: &Decl, stmts: &[Stmt], s: &State, history: Option<&[i64]>) -> Result<Vec<State>, EvalError> {
    let mut fuel = ATOMIC_FUEL;
    let mut out = Vec::new();
    for st in exec_seq(decl, stmts, vec![s.clone()], history, &mut fuel)? {
        if !out.contains(&st) {
            out.push(st);
        }
    }
    Ok(out)
}

fn exec_seq(
    decl: &Decl,
    stmts: &[Stmt],
    mut states: Vec<State>,
    history: Option<&[i64]>,
    fuel: &mut u32,
) -> Result<Vec<State>, EvalError> {
    for st in stmts {
        let mut next = Vec::new();
        for s in states {
            next.extend(exec_stmt(decl, st, s, history, fuel)?);
        }
        if next.len() > MAX_OUTCOMES {
            return Err(EvalError::new(EvalErrorKind::Divergence, st.span));
        }
        states = next;
    }
    Ok(states)
}

fn eval_guard(decl: &Decl, e: &Expr, s: &State, history: Option<&[i64]>) -> Result<bool, EvalError> {
    Env { decl, before: s, after: s, history }.eval_bool(e)
}

fn exec_stmt(
    decl: &Decl,
    st: &Stmt,
    mut s: State,
    history: Option<&[i64]>,
    fuel: &mut u32,
) -> Result<Vec<State>, EvalError> {
    match &st.kind {
        StmtKind::Assign { var, expr } => {
            let slot = decl
                .slot(var)
                .ok_or_else(|| EvalError::new(EvalErrorKind::UndeclaredVariable(var.clone()), st.span))?;
            let v = Env { decl, before: &s, after: &s, history }.eval(expr)?;
            if !decl.var(slot).domain.contains(&v) {
                let value = decl.show(slot, &v);
                return Err(EvalError::new(EvalErrorKind::OutOfRange { var: var.clone(), value }, st.span));
            }
            s.set(slot, v);
            Ok(vec![s])
        }
        StmtKind::Choose { var } => {
            let slot = decl
                .slot(var)
                .ok_or_else(|| EvalError::new(EvalErrorKind::UndeclaredVariable(var.clone()), st.span))?;
            Ok(decl
                .var(slot)
                .domain
                .values()
                .map(|v| {
                    let mut t = s.clone();
                    t.set(slot, v);
                    t
                })
                .collect())
        }
        StmtKind::Skip => Ok(vec![s]),
        StmtKind::Atomic { body } => exec_seq(decl, body, vec![s], history, fuel),
        StmtKind::If { cond, then_branch, else_branch } => {
            let branch = if eval_guard(decl, cond, &s, history)? { then_branch } else { else_branch };
            exec_seq(decl, branch, vec![s], history, fuel)
        }
        StmtKind::While { cond, body } => {
            let mut done = Vec::new();
            let mut live = vec![s];
            while !live.is_empty() {
                let mut running = Vec::new();
                for t in live {
                    if eval_guard(decl, cond, &t, history)? {
                        running.push(t);
                    } else {
                        done.push(t);
                    }
                }
                if running.is_empty() {
                    break;
                }
                if *fuel == 0 {
                    return Err(EvalError::new(EvalErrorKind::Divergence, st.span));
                }
                *fuel -= 1;
                live = exec_seq(decl, body, running, history, fuel)?;
            }
            Ok(done)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn sys(src: &str) -> SystemSpec {
        let t = parse(src, "t.rg").unwrap();
        assert!(t.diagnostics.is_empty(), "{:?}", t.diagnostics);
        t.spec
    }

    #[test]
    fn statement_granularity_splits_guards() {
        let s = sys(include_str!("../../specs/gcd.rg"));
        let m = Machine::new(&s);
        let init = State::from_named(&s.decl, &[("a", Value::Int(12)), ("b", Value::Int(18))]).unwrap();
        let c = m.initial(init.clone());
        // while guard a != b: true, no state change
        let o = m.step(&c, ActorId(0)).unwrap();
        assert_eq!(o.len(), 1);
        assert_eq!(o[0].config.state, init);
        assert_eq!(o[0].config.pcs[0], 1);
        // if guard a > b: false, jumps back to the loop head
        let o2 = m.step(&o[0].config, ActorId(0)).unwrap();
        assert_eq!(o2[0].config.state, init);
        assert_eq!(o2[0].config.pcs[0], 0);
    }

    #[test]
    fn out_of_range_assignment_faults() {
        let s = sys("state { x: int[0..3]; } init x = 3;
            process p { pre true; layer l { rely true; guarantee true; } body { x := x + 1 } }");
        let m = Machine::new(&s);
        let c = m.initial(State(vec![Value::Int(3)]));
        let err = m.step(&c, ActorId(0)).unwrap_err();
        assert!(matches!(err.kind, EvalErrorKind::OutOfRange { .. }));
    }

    #[test]
    fn choose_yields_every_value() {
        let s = sys("state { x: int[0..3]; } init x = 0;
            process p { pre true; layer l { rely true; guarantee true; } body { x := * } }");
        let m = Machine::new(&s);
        let o = m.step(&m.initial(State(vec![Value::Int(0)])), ActorId(0)).unwrap();
        assert_eq!(o.len(), 4);
    }

    #[test]
    fn block_atomicity_runs_iterations() {
        let s = sys("state { x: int[0..3]; } init x = 0; atomicity block;
            process p { pre true; layer l { rely true; guarantee true; } body { while x < 3 { x := x + 1; skip } } }");
        let m = Machine::new(&s);
        let mut c = m.initial(State(vec![Value::Int(0)]));
        let mut steps = 0;
        while !m.all_terminated(&c) {
            c = m.step(&c, ActorId(0)).unwrap().remove(0).config;
            steps += 1;
        }
        assert_eq!(steps, 4, "three iterations plus the final guard");
    }

    #[test]
    fn divergent_atomic_block_is_reported() {
        let s = sys("state { x: int[0..3]; } init x = 0;
            process p { pre true; layer l { rely true; guarantee true; } body { atomic { while true { skip } } } }");
        let m = Machine::new(&s);
        let err = m.step(&m.initial(State(vec![Value::Int(0)])), ActorId(0)).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::Divergence);
    }

    #[test]
    fn counter_injector_increments() {
        let s = sys(include_str!("../../specs/counter.rg"));
        let m = Machine::new(&s);
        let st = State::from_named(&s.decl, &[("n", Value::Int(5)), ("n_p", Value::Int(3)), ("count", Value::Int(2))])
            .unwrap();
        let c = m.initial(st);
        assert!(m.injector_enabled(&c, 0).unwrap());
        let o = m.step(&c, ActorId(1)).unwrap();
        assert_eq!(o[0].config.state.get(s.decl.slot("n_p").unwrap()), Value::Int(4));
        assert_eq!(o[0].config.injections, vec![1]);
        assert!(!m.injector_enabled(&o[0].config, 0).unwrap(), "budget 1 is spent");
    }
}
