//! Two-epoch expression and predicate AST.
//!
//! A variable reference carries an [`Epoch`]: `old(x)` reads the state before
//! a transition and plain `x` reads the state after it. Single-state
//! predicates (pre/postconditions, guards) only use the `After` epoch.

use std::fmt;

use crate::span::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Epoch {
    Before,
    After,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    And,
    Or,
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::In => "in",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "=>",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::In => 5,
            BinOp::Add | BinOp::Sub => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 5
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    Gcd,
    Min,
    Abs,
    Card,
    /// Change applied to an integer variable by the most recent process step
    /// that modified it. Only meaningful inside injector bodies.
    LastDelta,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Gcd => "gcd",
            Builtin::Min => "min",
            Builtin::Abs => "abs",
            Builtin::Card => "card",
            Builtin::LastDelta => "last_delta",
        }
    }

    pub fn from_name(s: &str) -> Option<Builtin> {
        Some(match s {
            "gcd" => Builtin::Gcd,
            "min" => Builtin::Min,
            "abs" => Builtin::Abs,
            "card" => Builtin::Card,
            "last_delta" => Builtin::LastDelta,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Gcd => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    SetLit(Vec<Expr>),
    Var {
        name: String,
        epoch: Epoch,
    },
    /// Enum token such as `OK`.
    Token(String),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Quant {
        q: Quantifier,
        var: String,
        set: Box<Expr>,
        body: Box<Expr>,
    },
    Call {
        f: Builtin,
        args: Vec<Expr>,
    },
}

/// An expression node. Equality ignores spans, so parsed and pretty-printed
/// forms of the same formula compare equal.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn int(v: i64) -> Self {
        Expr::new(ExprKind::Int(v), Span::default())
    }

    pub fn bool(b: bool) -> Self {
        Expr::new(ExprKind::Bool(b), Span::default())
    }

    pub fn var(name: &str) -> Self {
        Expr::new(ExprKind::Var { name: name.to_string(), epoch: Epoch::After }, Span::default())
    }

    pub fn old(name: &str) -> Self {
        Expr::new(ExprKind::Var { name: name.to_string(), epoch: Epoch::Before }, Span::default())
    }

    pub fn token(name: &str) -> Self {
        Expr::new(ExprKind::Token(name.to_string()), Span::default())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        let span = lhs.span.to(rhs.span);
        Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span)
    }

    pub fn call(f: Builtin, args: Vec<Expr>) -> Self {
        Expr::new(ExprKind::Call { f, args }, Span::default())
    }

    pub fn quant(q: Quantifier, var: &str, set: Expr, body: Expr) -> Self {
        Expr::new(
            ExprKind::Quant { q, var: var.to_string(), set: Box::new(set), body: Box::new(body) },
            Span::default(),
        )
    }

    /// Conjunction of all parts; `true` when empty.
    pub fn and_all(parts: impl IntoIterator<Item = Expr>) -> Expr {
        parts.into_iter().reduce(|a, b| Expr::binary(BinOp::And, a, b)).unwrap_or_else(|| Expr::bool(true))
    }

    /// Disjunction of all parts; `false` when empty.
    pub fn or_all(parts: impl IntoIterator<Item = Expr>) -> Expr {
        parts.into_iter().reduce(|a, b| Expr::binary(BinOp::Or, a, b)).unwrap_or_else(|| Expr::bool(false))
    }

    /// Direct subexpressions, in source order.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var { .. } | ExprKind::Token(_) => {
                vec![]
            }
            ExprKind::SetLit(es) | ExprKind::Call { args: es, .. } => es.iter().collect(),
            ExprKind::Neg(e) | ExprKind::Not(e) => vec![e],
            ExprKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            ExprKind::Quant { set, body, .. } => vec![set, body],
        }
    }

    /// Visits every node in pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Free state-variable references `(name, epoch)`, excluding quantifier-bound names.
    pub fn free_vars(&self) -> Vec<(String, Epoch)> {
        fn go(e: &Expr, bound: &mut Vec<String>, out: &mut Vec<(String, Epoch)>) {
            match &e.kind {
                ExprKind::Var { name, epoch } => {
                    if !bound.contains(name) {
                        let key = (name.clone(), *epoch);
                        if !out.contains(&key) {
                            out.push(key);
                        }
                    }
                }
                ExprKind::Quant { var, set, body, .. } => {
                    go(set, bound, out);
                    bound.push(var.clone());
                    go(body, bound, out);
                    bound.pop();
                }
                _ => {
                    for c in e.children() {
                        go(c, bound, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn mentions_before(&self) -> bool {
        self.free_vars().iter().any(|(_, e)| *e == Epoch::Before)
    }

    /// Renames state variables (both epochs) through `f`; bound names are untouched.
    pub fn rename_vars(&self, f: &impl Fn(&str) -> String) -> Expr {
        fn go(e: &Expr, bound: &mut Vec<String>, f: &impl Fn(&str) -> String) -> Expr {
            let kind = match &e.kind {
                ExprKind::Var { name, epoch } if !bound.contains(name) => {
                    ExprKind::Var { name: f(name), epoch: *epoch }
                }
                ExprKind::Quant { q, var, set, body } => {
                    let set = go(set, bound, f);
                    bound.push(var.clone());
                    let body = go(body, bound, f);
                    bound.pop();
                    ExprKind::Quant { q: *q, var: var.clone(), set: Box::new(set), body: Box::new(body) }
                }
                ExprKind::SetLit(es) => ExprKind::SetLit(es.iter().map(|x| go(x, bound, f)).collect()),
                ExprKind::Call { f: b, args } => {
                    ExprKind::Call { f: *b, args: args.iter().map(|x| go(x, bound, f)).collect() }
                }
                ExprKind::Neg(x) => ExprKind::Neg(Box::new(go(x, bound, f))),
                ExprKind::Not(x) => ExprKind::Not(Box::new(go(x, bound, f))),
                ExprKind::Binary { op, lhs, rhs } => {
                    ExprKind::Binary { op: *op, lhs: Box::new(go(lhs, bound, f)), rhs: Box::new(go(rhs, bound, f)) }
                }
                other => other.clone(),
            };
            Expr { kind, span: e.span }
        }
        go(self, &mut Vec::new(), f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::dsl::printer::expr_to_string(self))
    }
}

impl std::ops::Not for Expr {
    type Output = Expr;

    fn not(self) -> Expr {
        let span = self.span;
        Expr::new(ExprKind::Not(Box::new(self)), span)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_ignores_spans() {
        let mut a = Expr::var("x");
        a.span =
            Span::new(crate::span::Pos { line: 1, col: 1, offset: 0 }, crate::span::Pos { line: 1, col: 2, offset: 1 });
        assert_eq!(a, Expr::var("x"));
        assert_ne!(Expr::var("x"), Expr::old("x"));
    }

    #[test]
    fn free_vars_skip_bound() {
        let e = Expr::quant(
            Quantifier::Forall,
            "e",
            Expr::var("S"),
            Expr::binary(BinOp::Le, Expr::var("r"), Expr::var("e")),
        );
        assert_eq!(e.free_vars(), vec![("S".to_string(), Epoch::After), ("r".to_string(), Epoch::After)]);
    }

    #[test]
    fn empty_folds() {
        assert_eq!(Expr::and_all([]), Expr::bool(true));
        assert_eq!(Expr::or_all([]), Expr::bool(false));
    }
}
