//! Evaluation of expressions over a pair of states.
//!
//! `&&`, `||` and `=>` short-circuit left to right, so `S != {} && min(S) = r`
//! is total. Integer arithmetic is checked; overflow is an error, never a wrap.

use thiserror::Error;

use crate::domain::{Decl, NatSet, State, Value};
use crate::expr::{BinOp, Builtin, Epoch, Expr, ExprKind, Quantifier};
use crate::span::Span;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalErrorKind {
    Overflow,
    /// An assignment or literal left a variable's declared carrier.
    OutOfRange {
        var: String,
        value: String,
    },
    MinOfEmpty,
    BadSetElement(i64),
    UndeclaredVariable(String),
    UnknownToken(String),
    TypeMismatch(&'static str),
    /// An `atomic` block or injector body exceeded the internal step budget.
    Divergence,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{span}: {}", describe(.kind))]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub span: Span,
}

fn describe(kind: &EvalErrorKind) -> String {
    match kind {
        EvalErrorKind::Overflow => "arithmetic overflow".into(),
        EvalErrorKind::OutOfRange { var, value } => {
            format!("value {value} is out of range for `{var}`")
        }
        EvalErrorKind::MinOfEmpty => "min of the empty set is undefined".into(),
        EvalErrorKind::BadSetElement(e) => format!("{e} cannot be a set element"),
        EvalErrorKind::UndeclaredVariable(v) => format!("undeclared variable `{v}`"),
        EvalErrorKind::UnknownToken(t) => format!("unknown token `{t}`"),
        EvalErrorKind::TypeMismatch(what) => format!("type mismatch: expected {what}"),
        EvalErrorKind::Divergence => "atomic unit did not terminate".into(),
    }
}

impl EvalError {
    pub fn new(kind: EvalErrorKind, span: Span) -> Self {
        EvalError { kind, span }
    }
}

/// Greatest common divisor on absolute values, with `gcd(0, k) = |k|` and `gcd(0, 0) = 0`.
pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

/// Evaluation environment: the two epochs plus optional injector history.
pub struct Env<'a> {
    pub decl: &'a Decl,
    pub before: &'a State,
    pub after: &'a State,
    /// Per-slot delta of the last process step that changed the slot.
    pub history: Option<&'a [i64]>,
}

impl<'a> Env<'a> {
    pub fn pair(decl: &'a Decl, before: &'a State, after: &'a State) -> Self {
        Env { decl, before, after, history: None }
    }

    pub fn single(decl: &'a Decl, s: &'a State) -> Self {
        Env { decl, before: s, after: s, history: None }
    }

    pub fn eval(&self, e: &Expr) -> Result<Value, EvalError> {
        let mut bound = Vec::new();
        self.go(e, &mut bound)
    }

    pub fn eval_bool(&self, e: &Expr) -> Result<bool, EvalError> {
        let mut bound = Vec::new();
        self.bool(e, &mut bound)
    }

    fn int(&self, e: &Expr, bound: &mut Vec<(String, i64)>) -> Result<i64, EvalError> {
        self.go(e, bound)?.as_int().ok_or(EvalError::new(EvalErrorKind::TypeMismatch("int"), e.span))
    }

    fn bool(&self, e: &Expr, bound: &mut Vec<(String, i64)>) -> Result<bool, EvalError> {
        self.go(e, bound)?.as_bool().ok_or(EvalError::new(EvalErrorKind::TypeMismatch("bool"), e.span))
    }

    fn set(&self, e: &Expr, bound: &mut Vec<(String, i64)>) -> Result<NatSet, EvalError> {
        self.go(e, bound)?.as_set().ok_or(EvalError::new(EvalErrorKind::TypeMismatch("set"), e.span))
    }

    fn go(&self, e: &Expr, bound: &mut Vec<(String, i64)>) -> Result<Value, EvalError> {
        let overflow = || EvalError::new(EvalErrorKind::Overflow, e.span);
        Ok(match &e.kind {
            ExprKind::Int(v) => Value::Int(*v),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::SetLit(elems) => {
                let mut s = NatSet::EMPTY;
                for x in elems {
                    let v = self.int(x, bound)?;
                    if !s.insert(v) {
                        return Err(EvalError::new(EvalErrorKind::BadSetElement(v), x.span));
                    }
                }
                Value::Set(s)
            }
            ExprKind::Var { name, epoch } => {
                if *epoch == Epoch::After {
                    if let Some((_, v)) = bound.iter().rev().find(|(n, _)| n == name) {
                        return Ok(Value::Int(*v));
                    }
                }
                let slot = self
                    .decl
                    .slot(name)
                    .ok_or_else(|| EvalError::new(EvalErrorKind::UndeclaredVariable(name.clone()), e.span))?;
                match epoch {
                    Epoch::Before => self.before.get(slot),
                    Epoch::After => self.after.get(slot),
                }
            }
            ExprKind::Token(name) => {
                let (_, idx) = self
                    .decl
                    .token(name)
                    .ok_or_else(|| EvalError::new(EvalErrorKind::UnknownToken(name.clone()), e.span))?;
                Value::Token(idx)
            }
            ExprKind::Neg(x) => Value::Int(self.int(x, bound)?.checked_neg().ok_or_else(overflow)?),
            ExprKind::Not(x) => Value::Bool(!self.bool(x, bound)?),
            ExprKind::Binary { op, lhs, rhs } => match op {
                BinOp::And => Value::Bool(self.bool(lhs, bound)? && self.bool(rhs, bound)?),
                BinOp::Or => Value::Bool(self.bool(lhs, bound)? || self.bool(rhs, bound)?),
                BinOp::Implies => Value::Bool(!self.bool(lhs, bound)? || self.bool(rhs, bound)?),
                BinOp::Add => {
                    Value::Int(self.int(lhs, bound)?.checked_add(self.int(rhs, bound)?).ok_or_else(overflow)?)
                }
                BinOp::Sub => {
                    Value::Int(self.int(lhs, bound)?.checked_sub(self.int(rhs, bound)?).ok_or_else(overflow)?)
                }
                BinOp::Eq => Value::Bool(self.go(lhs, bound)? == self.go(rhs, bound)?),
                BinOp::Ne => Value::Bool(self.go(lhs, bound)? != self.go(rhs, bound)?),
                BinOp::Lt => Value::Bool(self.int(lhs, bound)? < self.int(rhs, bound)?),
                BinOp::Le => Value::Bool(self.int(lhs, bound)? <= self.int(rhs, bound)?),
                BinOp::Gt => Value::Bool(self.int(lhs, bound)? > self.int(rhs, bound)?),
                BinOp::Ge => Value::Bool(self.int(lhs, bound)? >= self.int(rhs, bound)?),
                BinOp::In => {
                    let x = self.int(lhs, bound)?;
                    Value::Bool(self.set(rhs, bound)?.contains(x))
                }
            },
            ExprKind::Quant { q, var, set, body } => {
                let s = self.set(set, bound)?;
                let mut result = matches!(q, Quantifier::Forall);
                for elem in s.iter() {
                    bound.push((var.clone(), elem));
                    let b = self.bool(body, bound);
                    bound.pop();
                    let b = b?;
                    match q {
                        Quantifier::Forall if !b => {
                            result = false;
                            break;
                        }
                        Quantifier::Exists if b => {
                            result = true;
                            break;
                        }
                        _ => {}
                    }
                }
                Value::Bool(result)
            }
            ExprKind::Call { f, args } => match f {
                Builtin::Gcd => Value::Int(gcd(self.int(&args[0], bound)?, self.int(&args[1], bound)?)),
                Builtin::Abs => Value::Int(self.int(&args[0], bound)?.checked_abs().ok_or_else(overflow)?),
                Builtin::Min => Value::Int(
                    self.set(&args[0], bound)?
                        .min()
                        .ok_or_else(|| EvalError::new(EvalErrorKind::MinOfEmpty, e.span))?,
                ),
                Builtin::Card => Value::Int(self.set(&args[0], bound)?.len() as i64),
                Builtin::LastDelta => {
                    let name = match &args[0].kind {
                        ExprKind::Var { name, .. } => name,
                        _ => return Err(EvalError::new(EvalErrorKind::TypeMismatch("variable"), args[0].span)),
                    };
                    let slot = self
                        .decl
                        .slot(name)
                        .ok_or_else(|| EvalError::new(EvalErrorKind::UndeclaredVariable(name.clone()), args[0].span))?;
                    Value::Int(self.history.map_or(0, |h| h[slot]))
                }
            },
        })
    }
}

/// Evaluates a two-epoch predicate on a transition `(before, after)`.
pub fn eval_predicate(pred: &Expr, decl: &Decl, before: &State, after: &State) -> Result<bool, EvalError> {
    Env::pair(decl, before, after).eval_bool(pred)
}

/// Evaluates a predicate on a single state; `old(x)` reads the same state.
pub fn eval_state_predicate(pred: &Expr, decl: &Decl, s: &State) -> Result<bool, EvalError> {
    Env::single(decl, s).eval_bool(pred)
}
