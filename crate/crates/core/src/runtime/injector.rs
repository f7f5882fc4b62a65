//! Injector templates and the validation-time check of injector bodies.

use std::collections::BTreeSet;

use crate::domain::{all_states, Decl, Domain, State};
use crate::eval::{Env, EvalError, EvalErrorKind};
use crate::expr::{BinOp, Builtin, Expr};
use crate::model::{FaultKind, InjectorSpec, SystemSpec};
use crate::program::{Program, Stmt, StmtKind};
use crate::span::Span;

use super::machine::{self, exec_block};
use super::RuntimeError;

fn frames(decl: &Decl, except: &str) -> Vec<Expr> {
    decl.names().filter(|n| *n != except).map(|n| Expr::binary(BinOp::Eq, Expr::var(n), Expr::old(n))).collect()
}

fn int_bounds(decl: &Decl, var: &str) -> Result<(i64, i64), RuntimeError> {
    match decl.get(var).map(|v| &v.domain) {
        Some(Domain::Int { lo, hi }) => Ok((*lo, *hi)),
        Some(d) => Err(RuntimeError::Unsupported(format!("`{var}` has carrier {d}; this fault kind needs an int"))),
        None => Err(RuntimeError::UnknownVariable(var.to_string())),
    }
}

/// Builds an injector from a fault-kind template.
///
/// * `LostUpdate`: deletes one decrement of `target` by incrementing it while
///   it is above its lower bound. The guarantee demands a strict increase and
///   frames every other variable.
/// * `DuplicatedUpdate`: re-applies the last process-step change of `target`.
/// * `FakeUpdate`: sets `target` to any value of its carrier.
///
/// The last two guarantee only the frame of the other variables.
pub fn make_injector(kind: FaultKind, target: &str, decl: &Decl, budget: u32) -> Result<InjectorSpec, RuntimeError> {
    if decl.slot(target).is_none() {
        return Err(RuntimeError::UnknownVariable(target.to_string()));
    }
    let x = || Expr::var(target);
    let (enabling, guarantee, body) = match kind {
        FaultKind::LostUpdate => {
            let (lo, _) = int_bounds(decl, target)?;
            let above = Expr::binary(BinOp::Gt, x(), Expr::int(lo));
            let inc = Stmt::assign(target, Expr::binary(BinOp::Add, x(), Expr::int(1)));
            let body = Stmt::new(
                StmtKind::If { cond: above.clone(), then_branch: vec![inc], else_branch: Vec::new() },
                Span::default(),
            );
            let mut g = vec![Expr::binary(BinOp::Gt, x(), Expr::old(target))];
            g.extend(frames(decl, target));
            (above, Expr::and_all(g), vec![body])
        }
        FaultKind::DuplicatedUpdate => {
            int_bounds(decl, target)?;
            let delta = || Expr::call(Builtin::LastDelta, vec![x()]);
            let enabling = Expr::binary(BinOp::Ne, delta(), Expr::int(0));
            let body = Stmt::assign(target, Expr::binary(BinOp::Add, x(), delta()));
            (enabling, Expr::and_all(frames(decl, target)), vec![body])
        }
        FaultKind::FakeUpdate => {
            let body = Stmt::new(StmtKind::Choose { var: target.to_string() }, Span::default());
            (Expr::bool(true), Expr::and_all(frames(decl, target)), vec![body])
        }
    };
    Ok(InjectorSpec {
        id: "EI".into(),
        kinds: BTreeSet::from([kind]),
        enabling,
        guarantee,
        budget,
        body: Program::new(body),
        span: Span::default(),
    })
}

/// A fake update that writes one fixed value, such as `sensor := ERROR`.
/// The guarantee pins the written value and frames every other variable.
pub fn make_fake_injector(target: &str, value: Expr, decl: &Decl, budget: u32) -> Result<InjectorSpec, RuntimeError> {
    if decl.slot(target).is_none() {
        return Err(RuntimeError::UnknownVariable(target.to_string()));
    }
    let mut g = vec![Expr::binary(BinOp::Eq, Expr::var(target), value.clone())];
    g.extend(frames(decl, target));
    Ok(InjectorSpec {
        id: "EI".into(),
        kinds: BTreeSet::from([FaultKind::FakeUpdate]),
        enabling: Expr::bool(true),
        guarantee: Expr::and_all(g),
        budget,
        body: Program::new(vec![Stmt::assign(target, value)]),
        span: Span::default(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BodyCheck {
    /// Every enabled state and every outcome satisfies the guarantee.
    /// `edge_states` counts enabled states whose body leaves a carrier; the
    /// runtime reports those as faults if they are ever reached.
    Holds {
        states: u64,
        edge_states: u64,
    },
    Fails {
        before: State,
        after: State,
    },
    /// The body raised an evaluation error from an enabled state.
    Faults {
        before: State,
        error: EvalError,
    },
    /// The check was not run, with the reason.
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InjectorBodyVerdict {
    pub injector: String,
    pub result: BodyCheck,
}

fn reads_history(inj: &InjectorSpec) -> bool {
    machine::reads_history(&inj.enabling) || inj.body.expressions().into_iter().any(machine::reads_history)
}

/// Runs every injector body from every enabled state and checks its guarantee.
/// Injectors whose behavior depends on step history, and state spaces above
/// `cap`, are skipped.
pub fn check_injector_bodies(sys: &SystemSpec, cap: u128) -> Vec<InjectorBodyVerdict> {
    let decl = &sys.decl;
    sys.injectors
        .iter()
        .map(|inj| {
            let result = if reads_history(inj) {
                BodyCheck::Skipped("behavior depends on process-step history".into())
            } else if decl.state_space() > cap {
                BodyCheck::Skipped(format!("state space {} exceeds the cap of {cap}", decl.state_space()))
            } else {
                check_one(decl, inj)
            };
            InjectorBodyVerdict { injector: inj.id.clone(), result }
        })
        .collect()
}

fn check_one(decl: &Decl, inj: &InjectorSpec) -> BodyCheck {
    let (mut states, mut edge_states) = (0u64, 0u64);
    for s in all_states(decl) {
        match Env::single(decl, &s).eval_bool(&inj.enabling) {
            Ok(true) => {}
            Ok(false) => continue,
            Err(error) => return BodyCheck::Faults { before: s, error },
        }
        states += 1;
        let outs = match exec_block(decl, &inj.body.stmts, &s, None) {
            Ok(o) => o,
            Err(EvalError { kind: EvalErrorKind::OutOfRange { .. }, .. }) => {
                edge_states += 1;
                continue;
            }
            Err(error) => return BodyCheck::Faults { before: s, error },
        };
        for after in outs {
            if !Env::pair(decl, &s, &after).eval_bool(&inj.guarantee).unwrap_or(false) {
                return BodyCheck::Fails { before: s, after };
            }
        }
    }
    BodyCheck::Holds { states, edge_states }
}
