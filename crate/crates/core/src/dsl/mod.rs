//! Surface language for system specifications (`.rg` files).

pub mod lexer;
pub mod parser;
pub mod printer;

use std::fmt;

use thiserror::Error;

pub use printer::{expr_to_string, pretty_print};

use crate::domain::Decl;
use crate::expr::Expr;
use crate::model::{validate_system, Diagnostic, SystemSpec};
use crate::span::{SourceSpan, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    Type,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Lexical => "lexical error",
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::Type => "type error",
        })
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{span}: {kind}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub span: Span,
}

/// A parsed system. Every AST node carries its own span; `diagnostics` holds
/// the validation findings for the spec (empty when it is well formed).
#[derive(Clone, Debug)]
pub struct ParseTree {
    pub spec: SystemSpec,
    pub file: String,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseTree {
    pub fn locate(&self, span: Span) -> SourceSpan {
        SourceSpan { file: self.file.clone(), span }
    }
}

/// Parses a system. Syntax and lexical failures are errors; validation
/// findings are returned in [`ParseTree::diagnostics`].
pub fn parse(text: &str, file: &str) -> Result<ParseTree, Vec<ParseError>> {
    let spec = parser::Parser::new(text).and_then(|mut p| p.system()).map_err(|e| vec![e])?;
    let diagnostics = validate_system(&spec);
    Ok(ParseTree { spec, file: file.to_string(), diagnostics })
}

/// Like [`parse`], but validation findings become type errors.
pub fn parse_valid(text: &str, file: &str) -> Result<ParseTree, Vec<ParseError>> {
    let tree = parse(text, file)?;
    if tree.diagnostics.is_empty() {
        return Ok(tree);
    }
    Err(tree
        .diagnostics
        .into_iter()
        .map(|d| ParseError { kind: ParseErrorKind::Type, message: d.message, span: d.span })
        .collect())
}

/// Parses a single expression against a declaration. Identifiers resolve to
/// enum tokens when the declaration names them as such. No type checking.
pub fn parse_expr(src: &str, decl: &Decl) -> Result<Expr, ParseError> {
    let mut p = parser::Parser::with_decl(src, decl)?;
    let e = p.expr()?;
    if !p.at_eof() {
        return p.error(format!("unexpected {} after expression", p.peek().describe()));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "state{x:int[0..1];} init x=0; process p { pre true; layer normal { rely true; guarantee true; post true; } body { skip } }";

    #[test]
    fn minimal_spec_round_trips() {
        let t = parse(MINIMAL, "m.rg").unwrap();
        assert!(t.diagnostics.is_empty());
        let printed = pretty_print(&t.spec);
        assert_eq!(parse(&printed, "m.rg").unwrap().spec, t.spec);
    }

    #[test]
    fn unbalanced_paren_is_one_located_error() {
        let src = "state { a: int[0..3]; } init true;\nprocess p { pre true; layer l { rely (a = old(a); guarantee true; } body { skip } }";
        let errs = parse(src, "t.rg").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].kind, ParseErrorKind::Syntax);
        assert_eq!(errs[0].span.start.line, 2);
        assert!(errs[0].message.contains("`)`"), "{}", errs[0].message);
        let semi = src.find("old(a);").unwrap() + "old(a)".len();
        assert_eq!(errs[0].span.start.offset, semi);
    }

    #[test]
    fn lexical_errors_are_reported() {
        let errs = parse("state { x: int[0..1] @ }", "t.rg").unwrap_err();
        assert_eq!(errs[0].kind, ParseErrorKind::Lexical);
    }

    #[test]
    fn keywords_are_reserved() {
        let errs = parse("state { while: bool; }", "t.rg").unwrap_err();
        assert!(errs[0].message.contains("reserved"));
    }

    #[test]
    fn tokens_resolve_against_state() {
        let src = "state { m: enum{OK, ERROR}; } init m = OK;
            process p { pre true; layer normal { rely m = old(m); guarantee true; } body { m := ERROR } }";
        let t = parse(src, "t.rg").unwrap();
        assert!(t.diagnostics.is_empty(), "{:?}", t.diagnostics);
        assert_eq!(t.spec.init, Expr::binary(crate::expr::BinOp::Eq, Expr::var("m"), Expr::token("OK")));
    }

    #[test]
    fn comparisons_do_not_chain() {
        let d = Decl::from_pairs([("x", crate::domain::Domain::Int { lo: 0, hi: 3 })]);
        assert!(parse_expr("x < x < x", &d).is_err());
        assert!(parse_expr("x < 1 x", &d).is_err());
    }

    #[test]
    fn parse_valid_turns_diagnostics_into_errors() {
        let src = "state { x: int[0..1]; } init y = 0;
            process p { pre true; layer normal { rely true; guarantee true; } body { skip } }";
        let errs = parse_valid(src, "t.rg").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].kind, ParseErrorKind::Type);
    }
}
