//! Statement AST for process and injector bodies.

use crate::expr::Expr;
use crate::span::Span;

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Assign {
        var: String,
        expr: Expr,
    },
    /// `x := *`: nondeterministically picks any value of `x`'s carrier.
    Choose {
        var: String,
    },
    Skip,
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    Atomic {
        body: Vec<Stmt>,
    },
}

#[derive(Clone, Debug)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Stmt { kind, span }
    }

    pub fn assign(var: &str, expr: Expr) -> Self {
        Stmt::new(StmtKind::Assign { var: var.to_string(), expr }, Span::default())
    }

    /// Variables this statement may write, in first-write order.
    pub fn assigned_vars(&self, out: &mut Vec<String>) {
        let mut push = |v: &String| {
            if !out.contains(v) {
                out.push(v.clone());
            }
        };
        match &self.kind {
            StmtKind::Assign { var, .. } | StmtKind::Choose { var } => push(var),
            StmtKind::Skip => {}
            StmtKind::While { body, .. } | StmtKind::Atomic { body } => {
                body.iter().for_each(|s| s.assigned_vars(out));
            }
            StmtKind::If { then_branch, else_branch, .. } => {
                then_branch.iter().chain(else_branch).for_each(|s| s.assigned_vars(out));
            }
        }
    }

    /// Expressions read by this statement (guards and right-hand sides), recursively.
    pub fn expressions<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match &self.kind {
            StmtKind::Assign { expr, .. } => out.push(expr),
            StmtKind::Choose { .. } | StmtKind::Skip => {}
            StmtKind::While { cond, body } => {
                out.push(cond);
                body.iter().for_each(|s| s.expressions(out));
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                out.push(cond);
                then_branch.iter().chain(else_branch).for_each(|s| s.expressions(out));
            }
            StmtKind::Atomic { body } => body.iter().for_each(|s| s.expressions(out)),
        }
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::While { body, .. } | StmtKind::Atomic { body } => body.iter().for_each(|s| s.walk(f)),
            StmtKind::If { then_branch, else_branch, .. } => {
                then_branch.iter().chain(else_branch).for_each(|s| s.walk(f))
            }
            _ => {}
        }
    }
}

/// A sequential program.
#[derive(Clone, Debug, Default)]
pub struct Program {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.stmts == other.stmts
    }
}

impl Program {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        Program { stmts, span: Span::default() }
    }

    pub fn assigned_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.stmts.iter().for_each(|s| s.assigned_vars(&mut out));
        out
    }

    pub fn expressions(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.stmts.iter().for_each(|s| s.expressions(&mut out));
        out
    }
}
