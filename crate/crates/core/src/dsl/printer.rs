//! Deterministic pretty-printer. Output reparses to a structurally equal spec.

use std::fmt::Write;

use crate::domain::Domain;
use crate::expr::{BinOp, Epoch, Expr, ExprKind, Quantifier};
use crate::model::{Atomicity, SystemSpec};
use crate::program::{Stmt, StmtKind};

const ATOM: u8 = 9;
const NOT: u8 = 4;
const NEG: u8 = 7;

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Not(_) => NOT,
        ExprKind::Neg(_) => NEG,
        ExprKind::Int(v) if *v < 0 => NEG,
        _ => ATOM,
    }
}

fn child(out: &mut String, e: &Expr, min: u8) {
    if prec(e) < min {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_list(out: &mut String, items: &[Expr]) {
    for (i, a) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, a);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::SetLit(items) => {
            out.push('{');
            write_list(out, items);
            out.push('}');
        }
        ExprKind::Var { name, epoch: Epoch::After } => out.push_str(name),
        ExprKind::Var { name, epoch: Epoch::Before } => {
            let _ = write!(out, "old({name})");
        }
        ExprKind::Token(t) => out.push_str(t),
        ExprKind::Neg(inner) => {
            out.push('-');
            // `--` would lex as one token, so nested negations get parentheses.
            child(out, inner, ATOM);
        }
        ExprKind::Not(inner) => {
            out.push('!');
            child(out, inner, NOT);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            let (l, r) = match op {
                BinOp::Implies => (p + 1, p),
                _ if op.is_comparison() => (p + 1, p + 1),
                _ => (p, p + 1),
            };
            child(out, lhs, l);
            let _ = write!(out, " {} ", op.symbol());
            child(out, rhs, r);
        }
        ExprKind::Quant { q, var, set, body } => {
            let kw = match q {
                Quantifier::Forall => "forall",
                Quantifier::Exists => "exists",
            };
            let _ = write!(out, "({kw} {var} in ");
            child(out, set, BinOp::Add.precedence());
            out.push_str(" . ");
            write_expr(out, body);
            out.push(')');
        }
        ExprKind::Call { f, args } => {
            out.push_str(f.name());
            out.push('(');
            write_list(out, args);
            out.push(')');
        }
    }
}

/// Renders an expression in surface syntax with minimal parentheses.
pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn quote(s: &str) -> String {
    let mut out = String::from('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn domain_to_string(d: &Domain) -> String {
    match d {
        Domain::Int { lo, hi } => format!("int[{lo}..{hi}]"),
        Domain::Bool => "bool".into(),
        Domain::NatSet { max } => format!("natset({max})"),
        Domain::Enum { variants } => format!("enum{{{}}}", variants.join(", ")),
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_block(out: &mut String, stmts: &[Stmt], depth: usize) {
    out.push_str("{\n");
    for s in stmts {
        write_stmt(out, s, depth + 1);
    }
    indent(out, depth);
    out.push('}');
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::Assign { var, expr } => {
            let _ = writeln!(out, "{var} := {};", expr_to_string(expr));
        }
        StmtKind::Choose { var } => {
            let _ = writeln!(out, "{var} := *;");
        }
        StmtKind::Skip => out.push_str("skip;\n"),
        StmtKind::While { cond, body } => {
            let _ = write!(out, "while {} ", expr_to_string(cond));
            write_block(out, body, depth);
            out.push('\n');
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            let _ = write!(out, "if {} then ", expr_to_string(cond));
            write_block(out, then_branch, depth);
            if !else_branch.is_empty() {
                out.push_str(" else ");
                write_block(out, else_branch, depth);
            }
            out.push('\n');
        }
        StmtKind::Atomic { body } => {
            out.push_str("atomic ");
            write_block(out, body, depth);
            out.push('\n');
        }
    }
}

/// Renders a whole system in canonical layout.
pub fn pretty_print(spec: &SystemSpec) -> String {
    let mut out = String::from("state {\n");
    for v in spec.decl.vars() {
        let _ = write!(out, "  {}: {}", v.name, domain_to_string(&v.domain));
        if let Some(a) = &v.alias {
            let _ = write!(out, " as {}", quote(a));
        }
        out.push_str(";\n");
    }
    out.push_str("}\n\n");
    let _ = writeln!(out, "init {};", expr_to_string(&spec.init));
    if spec.atomicity == Atomicity::Block {
        out.push_str("atomicity block;\n");
    }
    for p in &spec.processes {
        let _ = writeln!(out, "\nprocess {} {{", p.id);
        let _ = writeln!(out, "  pre {};", expr_to_string(&p.pre));
        for l in &p.layers {
            let _ = writeln!(out, "  layer {} {{", l.name);
            let _ = writeln!(out, "    rely {};", expr_to_string(&l.rely));
            let _ = writeln!(out, "    guarantee {};", expr_to_string(&l.guarantee));
            if let Some(post) = &l.post {
                let _ = writeln!(out, "    post {};", expr_to_string(post));
            }
            out.push_str("  }\n");
        }
        out.push_str("  body ");
        write_block(&mut out, &p.body.stmts, 1);
        out.push_str("\n}\n");
    }
    for inj in &spec.injectors {
        let _ = writeln!(out, "\ninjector {} {{", inj.id);
        let kinds: Vec<&str> = inj.kinds.iter().map(|k| k.keyword()).collect();
        let _ = writeln!(out, "  kinds {};", kinds.join(" | "));
        let _ = writeln!(out, "  enabling {};", expr_to_string(&inj.enabling));
        let _ = writeln!(out, "  guarantee {};", expr_to_string(&inj.guarantee));
        let _ = writeln!(out, "  budget {};", inj.budget);
        out.push_str("  body ");
        write_block(&mut out, &inj.body.stmts, 1);
        out.push_str("\n}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Decl, Domain};
    use crate::dsl::parse_expr;

    fn decl() -> Decl {
        Decl::from_pairs([
            ("x", Domain::Int { lo: -5, hi: 5 }),
            ("y", Domain::Int { lo: -5, hi: 5 }),
            ("p", Domain::Bool),
            ("S", Domain::NatSet { max: 6 }),
        ])
    }

    fn round(src: &str) -> String {
        let d = decl();
        let e = parse_expr(src, &d).unwrap();
        let printed = expr_to_string(&e);
        assert_eq!(parse_expr(&printed, &d).unwrap(), e, "{src} -> {printed}");
        printed
    }

    #[test]
    fn minimal_parentheses() {
        assert_eq!(round("(x + y) - 1 = 2"), "x + y - 1 = 2");
        assert_eq!(round("x - (y - 1) = 2"), "x - (y - 1) = 2");
        assert_eq!(round("(p => p) => p"), "(p => p) => p");
        assert_eq!(round("p => p => p"), "p => p => p");
        assert_eq!(round("!(p && p)"), "!(p && p)");
        assert_eq!(round("(p = p) = p"), "(p = p) = p");
    }

    #[test]
    fn negation_forms() {
        assert_eq!(round("x - -3 = 0"), "x - -3 = 0");
        assert_eq!(round("-(-x) = 0"), "-(-x) = 0");
        assert_eq!(round("-(x + y) = 0"), "-(x + y) = 0");
    }

    #[test]
    fn quantifiers_are_parenthesised() {
        assert_eq!(round("forall e in S . e <= x && p"), "(forall e in S . e <= x && p)");
        assert_eq!(round("∃ e ∈ S . e = 0"), "(exists e in S . e = 0)");
    }
}
