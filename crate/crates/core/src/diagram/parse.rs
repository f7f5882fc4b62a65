//! Block syntax for `.pf` diagram files.
//!
//! ```text
//! problem diagram PatientMonitoring {
//!     frame required_behavior;
//!     machine MonitorMachine "Monitor machine";
//!     domain Patients "Patients";
//!     interface MonitorMachine -- Patients : "vital factors";
//!     requirement Monitor "Monitor patient conditions";
//!     ref Monitor -> Patients : "vital factors";
//! }
//! ```

use crate::dsl::lexer::Tok;
use crate::dsl::parser::Parser;
use crate::dsl::ParseError;

use super::{Diagram, DiagramKind, FrameTag, Interface, Node, NodeKind, Reference};

/// Parses one diagram. Well-formedness is checked separately by
/// [`super::validate_diagram`].
pub fn parse_diagram(src: &str) -> Result<Diagram, ParseError> {
    let mut p = Parser::new(src)?;
    let kind = if p.eat_kw("context") {
        DiagramKind::Context
    } else if p.eat_kw("problem") {
        DiagramKind::Problem
    } else {
        return p.error("expected `context` or `problem`");
    };
    p.expect_kw("diagram")?;
    let (name, _) = p.ident()?;
    let mut d = Diagram::new(&name, kind);
    p.expect(Tok::LBrace)?;
    while !p.eat(&Tok::RBrace) {
        let start = p.span();
        if p.eat_kw("frame") {
            let (tag, _) = p.ident()?;
            match FrameTag::from_keyword(&tag) {
                Some(t) => d.frame = Some(t),
                None => return p.error(format!("unknown frame `{tag}`")),
            }
        } else if p.eat_kw("spec") {
            d.spec = Some(p.string()?);
        } else if p.at_kw("machine") || p.at_kw("domain") || p.at_kw("requirement") {
            let kind = match p.bump().tok {
                Tok::Ident(s) if s == "machine" => NodeKind::Machine,
                Tok::Ident(s) if s == "domain" => NodeKind::Domain,
                _ => NodeKind::Requirement,
            };
            let (id, _) = p.ident()?;
            let label = if matches!(p.peek(), Tok::Str(_)) { p.string()? } else { id.clone() };
            d.nodes.push(Node { id, label, kind, span: start.to(p.span()) });
        } else if p.eat_kw("interface") {
            let (a, _) = p.ident()?;
            p.expect(Tok::DashDash)?;
            let (b, _) = p.ident()?;
            let phenomena = phenomena(&mut p)?;
            d.interfaces.push(Interface { a, b, phenomena, span: start.to(p.span()) });
        } else if p.eat_kw("ref") {
            let (requirement, _) = p.ident()?;
            p.expect(Tok::Arrow)?;
            let (target, _) = p.ident()?;
            let phenomena = phenomena(&mut p)?;
            d.references.push(Reference { requirement, target, phenomena, span: start.to(p.span()) });
        } else if p.at_eof() {
            return p.error("unclosed diagram body");
        } else {
            return p.error("expected `frame`, `spec`, `machine`, `domain`, `requirement`, `interface` or `ref`");
        }
        p.expect(Tok::Semi)?;
    }
    if !p.at_eof() {
        return p.error("unexpected text after the diagram");
    }
    Ok(d)
}

/// Optional `: "p1", "p2"` list.
fn phenomena(p: &mut Parser) -> Result<Vec<String>, ParseError> {
    let mut out = Vec::new();
    if p.eat(&Tok::Colon) {
        out.push(p.string()?);
        while p.eat(&Tok::Comma) {
            out.push(p.string()?);
        }
    }
    Ok(out)
}
