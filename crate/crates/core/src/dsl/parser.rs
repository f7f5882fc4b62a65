use std::collections::BTreeSet;

use super::lexer::{lex, Tok, Token};
use super::{ParseError, ParseErrorKind};
use crate::domain::{Decl, Domain, VarDecl};
use crate::expr::{BinOp, Builtin, Epoch, Expr, ExprKind, Quantifier};
use crate::model::{Atomicity, ConditionLayer, FaultKind, InjectorSpec, ProcessSpec, SystemSpec};
use crate::program::{Program, Stmt, StmtKind};
use crate::span::Span;

pub const KEYWORDS: &[&str] = &[
    "state",
    "init",
    "atomicity",
    "process",
    "injector",
    "layer",
    "pre",
    "rely",
    "guarantee",
    "post",
    "body",
    "kinds",
    "enabling",
    "budget",
    "while",
    "if",
    "then",
    "else",
    "atomic",
    "skip",
    "old",
    "true",
    "false",
    "forall",
    "exists",
    "in",
    "int",
    "bool",
    "natset",
    "enum",
    "as",
    "gcd",
    "min",
    "abs",
    "card",
    "last_delta",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    decl: Decl,
    bound: Vec<String>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    pub(crate) fn new(src: &str) -> PResult<Self> {
        let toks =
            lex(src).map_err(|e| ParseError { kind: ParseErrorKind::Lexical, message: e.message, span: e.span })?;
        Ok(Parser { toks, pos: 0, decl: Decl::default(), bound: Vec::new() })
    }

    pub(crate) fn with_decl(src: &str, decl: &Decl) -> PResult<Self> {
        let mut p = Parser::new(src)?;
        p.decl = decl.clone();
        Ok(p)
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub(crate) fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError { kind: ParseErrorKind::Syntax, message: message.into(), span: self.span() })
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, t: Tok) -> PResult<Span> {
        if *self.peek() == t {
            Ok(self.bump().span)
        } else {
            self.unexpected(&t.describe())
        }
    }

    pub(crate) fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.bump().span)
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    /// A non-keyword identifier.
    pub(crate) fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => Ok((s, self.bump().span)),
            Tok::Ident(s) => self.error(format!("`{s}` is a reserved keyword")),
            _ => self.unexpected("an identifier"),
        }
    }

    pub(crate) fn string(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("a string literal"),
        }
    }

    fn int_literal(&mut self) -> PResult<i64> {
        let neg = self.eat(&Tok::Minus);
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { -(v as i64) } else { v as i64 })
            }
            _ => self.unexpected("an integer"),
        }
    }

    pub(crate) fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    // ---- system spec ----

    pub(crate) fn system(&mut self) -> PResult<SystemSpec> {
        self.state_block()?;
        let mut init: Option<Expr> = None;
        let mut atomicity = Atomicity::Statement;
        let mut processes = Vec::new();
        let mut injectors = Vec::new();
        while !self.at_eof() {
            if self.at_kw("init") {
                let at = self.span();
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::Semi)?;
                if init.is_some() {
                    return Err(ParseError {
                        kind: ParseErrorKind::Syntax,
                        message: "duplicate `init`".into(),
                        span: at,
                    });
                }
                init = Some(e);
            } else if self.eat_kw("atomicity") {
                let (mode, _) = match self.peek().clone() {
                    Tok::Ident(s) => (s, self.bump().span),
                    _ => return self.unexpected("`statement` or `block`"),
                };
                atomicity = match mode.as_str() {
                    "statement" => Atomicity::Statement,
                    "block" => Atomicity::Block,
                    _ => {
                        self.pos -= 1;
                        return self.unexpected("`statement` or `block`");
                    }
                };
                self.expect(Tok::Semi)?;
            } else if self.at_kw("process") {
                processes.push(self.process()?);
            } else if self.at_kw("injector") {
                injectors.push(self.injector()?);
            } else {
                return self.unexpected("`init`, `atomicity`, `process` or `injector`");
            }
        }
        Ok(SystemSpec {
            decl: self.decl.clone(),
            init: init.unwrap_or_else(|| Expr::bool(true)),
            atomicity,
            processes,
            injectors,
        })
    }

    fn state_block(&mut self) -> PResult<()> {
        self.expect_kw("state")?;
        self.expect(Tok::LBrace)?;
        let mut vars = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let (name, start) = self.ident()?;
            self.expect(Tok::Colon)?;
            let domain = self.domain()?;
            let alias = if self.eat_kw("as") { Some(self.string()?) } else { None };
            self.expect(Tok::Semi)?;
            vars.push(VarDecl { name, domain, alias, span: start.to(self.prev_span()) });
        }
        self.decl = Decl::new(vars);
        Ok(())
    }

    fn domain(&mut self) -> PResult<Domain> {
        if self.eat_kw("int") {
            self.expect(Tok::LBracket)?;
            let lo = self.int_literal()?;
            self.expect(Tok::DotDot)?;
            let hi = self.int_literal()?;
            self.expect(Tok::RBracket)?;
            Ok(Domain::Int { lo, hi })
        } else if self.eat_kw("bool") {
            Ok(Domain::Bool)
        } else if self.eat_kw("natset") {
            self.expect(Tok::LParen)?;
            let max = self.int_literal()?;
            if !(0..=u32::MAX as i64).contains(&max) {
                return self.error("natset bound must be a natural number");
            }
            self.expect(Tok::RParen)?;
            Ok(Domain::NatSet { max: max as u32 })
        } else if self.eat_kw("enum") {
            self.expect(Tok::LBrace)?;
            let mut variants = vec![self.ident()?.0];
            while self.eat(&Tok::Comma) {
                variants.push(self.ident()?.0);
            }
            self.expect(Tok::RBrace)?;
            Ok(Domain::Enum { variants })
        } else {
            self.unexpected("a domain (`int[..]`, `bool`, `natset(..)` or `enum{..}`)")
        }
    }

    fn clause(&mut self, kw: &str) -> PResult<Expr> {
        self.expect_kw(kw)?;
        let e = self.expr()?;
        self.expect(Tok::Semi)?;
        Ok(e)
    }

    fn process(&mut self) -> PResult<ProcessSpec> {
        let start = self.expect_kw("process")?;
        let (id, _) = self.ident()?;
        self.expect(Tok::LBrace)?;
        let pre = self.clause("pre")?;
        let mut layers = Vec::new();
        while self.at_kw("layer") {
            self.bump();
            let (name, _) = self.ident()?;
            self.expect(Tok::LBrace)?;
            let rely = self.clause("rely")?;
            let guarantee = self.clause("guarantee")?;
            let post = if self.at_kw("post") { Some(self.clause("post")?) } else { None };
            self.expect(Tok::RBrace)?;
            layers.push(ConditionLayer { name, rely, guarantee, post });
        }
        self.expect_kw("body")?;
        let body = self.program()?;
        self.eat(&Tok::Semi);
        self.expect(Tok::RBrace)?;
        Ok(ProcessSpec { id, pre, layers, body, span: start.to(self.prev_span()) })
    }

    fn injector(&mut self) -> PResult<InjectorSpec> {
        let start = self.expect_kw("injector")?;
        let (id, _) = self.ident()?;
        self.expect(Tok::LBrace)?;
        self.expect_kw("kinds")?;
        let mut kinds = BTreeSet::new();
        loop {
            let k = match self.peek().clone() {
                Tok::Ident(s) => FaultKind::from_keyword(&s),
                _ => None,
            };
            match k {
                Some(k) => {
                    self.bump();
                    kinds.insert(k);
                }
                None => return self.unexpected("a fault kind (`lost`, `dup` or `fake`)"),
            }
            if !self.eat(&Tok::Pipe) {
                break;
            }
        }
        self.expect(Tok::Semi)?;
        let enabling = self.clause("enabling")?;
        let guarantee = self.clause("guarantee")?;
        self.expect_kw("budget")?;
        let budget = self.int_literal()?;
        if !(0..=u32::MAX as i64).contains(&budget) {
            return self.error("budget must be a natural number");
        }
        self.expect(Tok::Semi)?;
        self.expect_kw("body")?;
        let body = self.program()?;
        self.eat(&Tok::Semi);
        self.expect(Tok::RBrace)?;
        Ok(InjectorSpec {
            id,
            kinds,
            enabling,
            guarantee,
            budget: budget as u32,
            body,
            span: start.to(self.prev_span()),
        })
    }

    // ---- statements ----

    fn program(&mut self) -> PResult<Program> {
        let start = self.span();
        let stmts = self.block()?;
        Ok(Program { stmts, span: start.to(self.prev_span()) })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while !self.eat(&Tok::RBrace) {
            out.push(self.stmt()?);
            self.eat(&Tok::Semi);
        }
        Ok(out)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.span();
        let kind = if self.eat_kw("skip") {
            StmtKind::Skip
        } else if self.eat_kw("while") {
            let cond = self.expr()?;
            let body = self.block()?;
            StmtKind::While { cond, body }
        } else if self.eat_kw("if") {
            let cond = self.expr()?;
            self.expect_kw("then")?;
            let then_branch = self.block()?;
            let else_branch = if self.eat_kw("else") { self.block()? } else { Vec::new() };
            StmtKind::If { cond, then_branch, else_branch }
        } else if self.eat_kw("atomic") {
            StmtKind::Atomic { body: self.block()? }
        } else if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Assign {
            let (var, _) = self.ident()?;
            self.expect(Tok::Assign)?;
            if self.eat(&Tok::Star) {
                StmtKind::Choose { var }
            } else {
                StmtKind::Assign { var, expr: self.expr()? }
            }
        } else {
            return self.unexpected("a statement");
        };
        Ok(Stmt::new(kind, start.to(self.prev_span())))
    }

    // ---- expressions ----

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.or_expr()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.expr()?;
            return Ok(Expr::binary(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.and_expr()?;
            lhs = Expr::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.not_expr()?;
            lhs = Expr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        let start = self.span();
        if self.eat(&Tok::Bang) {
            let inner = self.not_expr()?;
            return Ok(Expr::new(ExprKind::Not(Box::new(inner)), start.to(self.prev_span())));
        }
        self.cmp_expr()
    }

    fn cmp_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::In => BinOp::In,
            Tok::Ident(s) if s == "in" => BinOp::In,
            _ => return None,
        })
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let lhs = self.add_expr()?;
        if let Some(op) = self.cmp_op() {
            self.bump();
            let rhs = self.add_expr()?;
            if self.cmp_op().is_some() {
                return self.error("comparisons do not chain; add parentheses");
            }
            return Ok(Expr::binary(op, lhs, rhs));
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.span();
        if self.eat(&Tok::Minus) {
            let inner = self.unary()?;
            let span = start.to(self.prev_span());
            return Ok(match inner.kind {
                ExprKind::Int(v) => Expr::new(ExprKind::Int(-v), span),
                _ => Expr::new(ExprKind::Neg(Box::new(inner)), span),
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                ExprKind::Int(v as i64)
            }
            Tok::EmptySet => {
                self.bump();
                ExprKind::SetLit(Vec::new())
            }
            Tok::LBrace => {
                self.bump();
                let mut elems = Vec::new();
                if !self.eat(&Tok::RBrace) {
                    elems.push(self.expr()?);
                    while self.eat(&Tok::Comma) {
                        elems.push(self.expr()?);
                    }
                    self.expect(Tok::RBrace)?;
                }
                ExprKind::SetLit(elems)
            }
            Tok::LParen => {
                self.bump();
                let mut inner = self.expr()?;
                self.expect(Tok::RParen)?;
                inner.span = start.to(self.prev_span());
                return Ok(inner);
            }
            Tok::Forall | Tok::Exists => {
                let q = if *self.peek() == Tok::Forall { Quantifier::Forall } else { Quantifier::Exists };
                self.bump();
                return self.quantifier(q, start);
            }
            Tok::Ident(s) => match s.as_str() {
                "true" | "false" => {
                    self.bump();
                    ExprKind::Bool(s == "true")
                }
                "forall" | "exists" => {
                    self.bump();
                    let q = if s == "forall" { Quantifier::Forall } else { Quantifier::Exists };
                    return self.quantifier(q, start);
                }
                "old" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let (name, _) = self.ident()?;
                    self.expect(Tok::RParen)?;
                    ExprKind::Var { name, epoch: Epoch::Before }
                }
                name if Builtin::from_name(name).is_some() => {
                    let f = Builtin::from_name(name).expect("checked");
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let mut args = Vec::new();
                    if !self.eat(&Tok::RParen) {
                        args.push(self.expr()?);
                        while self.eat(&Tok::Comma) {
                            args.push(self.expr()?);
                        }
                        self.expect(Tok::RParen)?;
                    }
                    ExprKind::Call { f, args }
                }
                _ => {
                    let (name, _) = self.ident()?;
                    if !self.bound.contains(&name) && self.decl.slot(&name).is_none() && self.decl.is_token(&name) {
                        ExprKind::Token(name)
                    } else {
                        ExprKind::Var { name, epoch: Epoch::After }
                    }
                }
            },
            _ => return self.unexpected("an expression"),
        };
        Ok(Expr::new(kind, start.to(self.prev_span())))
    }

    fn quantifier(&mut self, q: Quantifier, start: Span) -> PResult<Expr> {
        let (var, _) = self.ident()?;
        if !(self.eat_kw("in") || self.eat(&Tok::In)) {
            return self.unexpected("`in`");
        }
        let set = self.add_expr()?;
        self.expect(Tok::Dot)?;
        self.bound.push(var.clone());
        let body = self.expr();
        self.bound.pop();
        let body = body?;
        Ok(Expr::new(ExprKind::Quant { q, var, set: Box::new(set), body: Box::new(body) }, start.to(self.prev_span())))
    }
}
