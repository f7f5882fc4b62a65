use std::fmt;

use thiserror::Error;

use crate::domain::{Decl, Domain};
use crate::expr::{BinOp, Builtin, Epoch, Expr, ExprKind};
use crate::span::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ty {
    Int,
    Bool,
    Set,
    /// Enum token; the payload is the enum id within the declaration.
    Token(usize),
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => f.write_str("int"),
            Ty::Bool => f.write_str("bool"),
            Ty::Set => f.write_str("set"),
            Ty::Token(_) => f.write_str("token"),
        }
    }
}

impl Ty {
    pub fn of_domain(decl: &Decl, slot: usize) -> Ty {
        match decl.var(slot).domain {
            Domain::Int { .. } => Ty::Int,
            Domain::Bool => Ty::Bool,
            Domain::NatSet { .. } => Ty::Set,
            Domain::Enum { .. } => Ty::Token(decl.enum_id_of(slot).unwrap_or(usize::MAX)),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{span}: {message}")]
pub struct TypeError {
    pub message: String,
    pub span: Span,
}

/// Which epochs an expression may read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpochMode {
    /// Pre/postconditions, guards and right-hand sides: no `old(...)`.
    Single,
    /// Rely and guarantee conditions.
    Two,
}

#[derive(Clone, Copy, Debug)]
pub struct CheckContext {
    pub epochs: EpochMode,
    /// Allows `last_delta(x)` (injector bodies and enabling conditions).
    pub history: bool,
}

impl CheckContext {
    pub const SINGLE: CheckContext = CheckContext { epochs: EpochMode::Single, history: false };
    pub const TWO: CheckContext = CheckContext { epochs: EpochMode::Two, history: false };
}

/// Infers the type of `expr` under `decl`.
pub fn type_check(expr: &Expr, decl: &Decl, ctx: CheckContext) -> Result<Ty, TypeError> {
    Checker { decl, ctx, bound: Vec::new() }.check(expr)
}

/// Checks that `expr` is a predicate (boolean-typed).
pub fn check_predicate(expr: &Expr, decl: &Decl, ctx: CheckContext) -> Result<(), TypeError> {
    match type_check(expr, decl, ctx)? {
        Ty::Bool => Ok(()),
        other => Err(TypeError { message: format!("expected a predicate, found {other}"), span: expr.span }),
    }
}

struct Checker<'a> {
    decl: &'a Decl,
    ctx: CheckContext,
    bound: Vec<String>,
}

impl Checker<'_> {
    fn err<T>(&self, span: Span, message: impl Into<String>) -> Result<T, TypeError> {
        Err(TypeError { message: message.into(), span })
    }

    fn expect(&mut self, e: &Expr, want: Ty, at: Span, what: &str) -> Result<(), TypeError> {
        let got = self.check(e)?;
        if got != want {
            return self.err(at, format!("{what}: expected {want}, found {got}"));
        }
        Ok(())
    }

    fn check(&mut self, e: &Expr) -> Result<Ty, TypeError> {
        match &e.kind {
            ExprKind::Int(_) => Ok(Ty::Int),
            ExprKind::Bool(_) => Ok(Ty::Bool),
            ExprKind::SetLit(elems) => {
                for x in elems {
                    self.expect(x, Ty::Int, x.span, "set element")?;
                }
                Ok(Ty::Set)
            }
            ExprKind::Var { name, epoch } => {
                if self.bound.contains(name) {
                    if *epoch == Epoch::Before {
                        return self.err(e.span, format!("old() applied to bound name `{name}`"));
                    }
                    return Ok(Ty::Int);
                }
                let Some(slot) = self.decl.slot(name) else {
                    return self.err(e.span, format!("undeclared variable `{name}`"));
                };
                if *epoch == Epoch::Before && self.ctx.epochs == EpochMode::Single {
                    return self.err(e.span, format!("old({name}) used in a single-state context"));
                }
                Ok(Ty::of_domain(self.decl, slot))
            }
            ExprKind::Token(name) => match self.decl.token(name) {
                Some((id, _)) => Ok(Ty::Token(id)),
                None => self.err(e.span, format!("unknown token `{name}`")),
            },
            ExprKind::Neg(x) => {
                self.expect(x, Ty::Int, e.span, "operand of unary -")?;
                Ok(Ty::Int)
            }
            ExprKind::Not(x) => {
                self.expect(x, Ty::Bool, e.span, "operand of !")?;
                Ok(Ty::Bool)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let (l, r) = (self.check(lhs)?, self.check(rhs)?);
                let sym = op.symbol();
                let mismatch = |s: &Self| s.err(e.span, format!("operator `{sym}` cannot combine {l} and {r}"));
                match op {
                    BinOp::Add | BinOp::Sub => {
                        if (l, r) != (Ty::Int, Ty::Int) {
                            return mismatch(self);
                        }
                        Ok(Ty::Int)
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if l != r {
                            return mismatch(self);
                        }
                        Ok(Ty::Bool)
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        if (l, r) != (Ty::Int, Ty::Int) {
                            return mismatch(self);
                        }
                        Ok(Ty::Bool)
                    }
                    BinOp::In => {
                        if (l, r) != (Ty::Int, Ty::Set) {
                            return mismatch(self);
                        }
                        Ok(Ty::Bool)
                    }
                    BinOp::And | BinOp::Or | BinOp::Implies => {
                        if (l, r) != (Ty::Bool, Ty::Bool) {
                            return mismatch(self);
                        }
                        Ok(Ty::Bool)
                    }
                }
            }
            ExprKind::Quant { var, set, body, .. } => {
                if self.decl.slot(var).is_some() || self.decl.is_token(var) || self.bound.contains(var) {
                    return self.err(e.span, format!("quantifier must bind a fresh name, `{var}` is taken"));
                }
                self.expect(set, Ty::Set, set.span, "quantifier range")?;
                self.bound.push(var.clone());
                let r = self.expect(body, Ty::Bool, body.span, "quantifier body");
                self.bound.pop();
                r?;
                Ok(Ty::Bool)
            }
            ExprKind::Call { f, args } => {
                if args.len() != f.arity() {
                    return self
                        .err(e.span, format!("{}() takes {} argument(s), got {}", f.name(), f.arity(), args.len()));
                }
                match f {
                    Builtin::Gcd => {
                        self.expect(&args[0], Ty::Int, args[0].span, "gcd argument")?;
                        self.expect(&args[1], Ty::Int, args[1].span, "gcd argument")?;
                    }
                    Builtin::Abs => self.expect(&args[0], Ty::Int, args[0].span, "abs argument")?,
                    Builtin::Min | Builtin::Card => {
                        self.expect(&args[0], Ty::Set, args[0].span, &format!("{} argument", f.name()))?
                    }
                    Builtin::LastDelta => {
                        if !self.ctx.history {
                            return self.err(e.span, "last_delta() is only available to injectors");
                        }
                        let ok = matches!(&args[0].kind, ExprKind::Var { name, epoch: Epoch::After }
                            if self.decl.slot(name).is_some() && !self.bound.contains(name));
                        if !ok {
                            return self.err(args[0].span, "last_delta() takes a state variable");
                        }
                        self.expect(&args[0], Ty::Int, args[0].span, "last_delta argument")?;
                    }
                }
                Ok(Ty::Int)
            }
        }
    }
}
