//! Static view: context and problem diagrams, their validation, refinement
//! of a context diagram into a problem diagram, and DOT export.
//!
//! A context diagram shows the machine to be built, the problem domains and
//! the interfaces of shared phenomena between them. A problem diagram adds
//! requirements (dashed ovals) with references to the domains they
//! constrain (dashed edges).

mod parse;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::span::Span;

pub use parse::parse_diagram;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagramKind {
    Context,
    Problem,
}

impl fmt::Display for DiagramKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagramKind::Context => "CONTEXT",
            DiagramKind::Problem => "PROBLEM",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Machine,
    Domain,
    Requirement,
}

/// Problem-frame pattern tag. Informative only: no structure is checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FrameTag {
    RequiredBehavior,
    CommandedBehavior,
    InformationDisplay,
    SimpleWorkpieces,
}

impl FrameTag {
    pub const ALL: [FrameTag; 4] = [
        FrameTag::RequiredBehavior,
        FrameTag::CommandedBehavior,
        FrameTag::InformationDisplay,
        FrameTag::SimpleWorkpieces,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            FrameTag::RequiredBehavior => "required_behavior",
            FrameTag::CommandedBehavior => "commanded_behavior",
            FrameTag::InformationDisplay => "information_display",
            FrameTag::SimpleWorkpieces => "simple_workpieces",
        }
    }

    pub fn from_keyword(s: &str) -> Option<FrameTag> {
        FrameTag::ALL.into_iter().find(|t| t.keyword() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub label: String,
    pub kind: NodeKind,
    pub span: Span,
}

impl Node {
    pub fn new(id: &str, label: &str, kind: NodeKind) -> Node {
        Node { id: id.into(), label: label.into(), kind, span: Span::default() }
    }
}

/// A solid edge between the machine and a domain, or between two domains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interface {
    pub a: String,
    pub b: String,
    pub phenomena: Vec<String>,
    pub span: Span,
}

impl Interface {
    pub fn new(a: &str, b: &str, phenomena: &[&str]) -> Interface {
        Interface {
            a: a.into(),
            b: b.into(),
            phenomena: phenomena.iter().map(|s| s.to_string()).collect(),
            span: Span::default(),
        }
    }
}

/// A dashed edge from a requirement to the domain whose phenomena it refers to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reference {
    pub requirement: String,
    pub target: String,
    pub phenomena: Vec<String>,
    pub span: Span,
}

impl Reference {
    pub fn new(requirement: &str, target: &str, phenomena: &[&str]) -> Reference {
        Reference {
            requirement: requirement.into(),
            target: target.into(),
            phenomena: phenomena.iter().map(|s| s.to_string()).collect(),
            span: Span::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagram {
    pub name: String,
    pub kind: DiagramKind,
    pub frame: Option<FrameTag>,
    /// Informal link to a specification file; never checked.
    pub spec: Option<String>,
    pub nodes: Vec<Node>,
    pub interfaces: Vec<Interface>,
    pub references: Vec<Reference>,
}

impl Diagram {
    pub fn new(name: &str, kind: DiagramKind) -> Diagram {
        Diagram {
            name: name.into(),
            kind,
            frame: None,
            spec: None,
            nodes: Vec::new(),
            interfaces: Vec::new(),
            references: Vec::new(),
        }
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }
}

/// A validation finding naming the offending node or edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagramDiagnostic {
    /// Node id, or an edge written `a -- b` or `r -> d`.
    pub subject: String,
    pub message: String,
    pub span: Span,
}

impl fmt::Display for DiagramDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.subject, self.message)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum DiagramError {
    #[error("diagram is not valid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<DiagramDiagnostic>),
    #[error("expected a context diagram")]
    NotContext,
    #[error("reference to unknown node `{0}`")]
    UnknownNode(String),
}

/// Checks the well-formedness rules; the result is empty when all hold.
///
/// * Exactly one machine, and unique node ids.
/// * Interfaces join two distinct known nodes, neither a requirement.
/// * Requirements and references appear only in problem diagrams.
/// * In a problem diagram every requirement has at least one reference, and
///   references go from a requirement to a domain.
pub fn validate_diagram(d: &Diagram) -> Vec<DiagramDiagnostic> {
    let mut out = Vec::new();
    let mut diag = |subject: &str, message: String, span: Span| {
        out.push(DiagramDiagnostic { subject: subject.to_string(), message, span })
    };
    let machines: Vec<&Node> = d.nodes.iter().filter(|n| n.kind == NodeKind::Machine).collect();
    if machines.is_empty() {
        diag(&d.name, "diagram has no machine".into(), Span::default());
    }
    for extra in machines.iter().skip(1) {
        diag(&extra.id, format!("second machine; `{}` is already the machine", machines[0].id), extra.span);
    }
    let mut seen = HashSet::new();
    for n in &d.nodes {
        if !seen.insert(n.id.as_str()) {
            diag(&n.id, "duplicate node id".into(), n.span);
        }
        if n.kind == NodeKind::Requirement && d.kind == DiagramKind::Context {
            diag(&n.id, "requirements appear only in problem diagrams".into(), n.span);
        }
    }
    for i in &d.interfaces {
        let subject = format!("{} -- {}", i.a, i.b);
        if i.a == i.b {
            diag(&subject, "interface joins a node to itself".into(), i.span);
        }
        for end in [&i.a, &i.b] {
            match d.node(end) {
                None => diag(&subject, format!("unknown node `{end}`"), i.span),
                Some(n) if n.kind == NodeKind::Requirement => {
                    diag(&subject, format!("`{end}` is a requirement; use a reference"), i.span)
                }
                Some(_) => {}
            }
        }
    }
    for r in &d.references {
        let subject = format!("{} -> {}", r.requirement, r.target);
        if d.kind == DiagramKind::Context {
            diag(&subject, "references appear only in problem diagrams".into(), r.span);
            continue;
        }
        match d.node(&r.requirement) {
            Some(n) if n.kind == NodeKind::Requirement => {}
            Some(_) => diag(&subject, format!("`{}` is not a requirement", r.requirement), r.span),
            None => diag(&subject, format!("unknown node `{}`", r.requirement), r.span),
        }
        match d.node(&r.target) {
            Some(n) if n.kind == NodeKind::Domain => {}
            Some(_) => diag(&subject, format!("`{}` is not a problem domain", r.target), r.span),
            None => diag(&subject, format!("unknown node `{}`", r.target), r.span),
        }
    }
    if d.kind == DiagramKind::Problem {
        for n in d.nodes.iter().filter(|n| n.kind == NodeKind::Requirement) {
            if !d.references.iter().any(|r| r.requirement == n.id) {
                diag(&n.id, "requirement has no reference".into(), n.span);
            }
        }
    }
    out
}

/// Adds requirements and their references to a valid context diagram.
pub fn refine_to_problem(c: &Diagram, reqs: &[Node], refs: &[Reference]) -> Result<Diagram, DiagramError> {
    if c.kind != DiagramKind::Context {
        return Err(DiagramError::NotContext);
    }
    let problems = validate_diagram(c);
    if !problems.is_empty() {
        return Err(DiagramError::Invalid(problems));
    }
    for r in refs {
        if !reqs.iter().any(|q| q.id == r.requirement) {
            return Err(DiagramError::UnknownNode(r.requirement.clone()));
        }
        if c.node(&r.target).is_none() {
            return Err(DiagramError::UnknownNode(r.target.clone()));
        }
    }
    let mut d = c.clone();
    d.kind = DiagramKind::Problem;
    d.nodes.extend(reqs.iter().map(|q| Node { kind: NodeKind::Requirement, ..q.clone() }));
    d.references.extend(refs.iter().cloned());
    let problems = validate_diagram(&d);
    if !problems.is_empty() {
        return Err(DiagramError::Invalid(problems));
    }
    Ok(d)
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
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

/// Deterministic DOT text. Nodes are emitted sorted by id and edges sorted
/// by their endpoints, so insertion order does not matter.
pub fn to_dot(d: &Diagram) -> Result<String, DiagramError> {
    let problems = validate_diagram(d);
    if !problems.is_empty() {
        return Err(DiagramError::Invalid(problems));
    }
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(&d.name));
    out.push_str("  rankdir=LR;\n");
    let _ = writeln!(out, "  label={};", quote(&format!("{} diagram: {}", d.kind, d.name)));
    let nodes: BTreeMap<&str, &Node> = d.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    for (id, n) in nodes {
        let style = match n.kind {
            NodeKind::Machine => "shape=box, peripheries=2",
            NodeKind::Domain => "shape=box",
            NodeKind::Requirement => "shape=ellipse, style=dashed",
        };
        let _ = writeln!(out, "  {} [label={}, {style}];", quote(id), quote(&n.label));
    }
    let mut interfaces: Vec<(&str, &str, String)> =
        d.interfaces.iter().map(|i| (i.a.as_str(), i.b.as_str(), i.phenomena.join(", "))).collect();
    interfaces.sort();
    for (a, b, label) in interfaces {
        let _ = writeln!(out, "  {} -> {} [dir=none, label={}];", quote(a), quote(b), quote(&label));
    }
    let mut refs: Vec<(&str, &str, String)> =
        d.references.iter().map(|r| (r.requirement.as_str(), r.target.as_str(), r.phenomena.join(", "))).collect();
    refs.sort();
    for (r, t, label) in refs {
        let _ =
            writeln!(out, "  {} -> {} [style=dashed, arrowhead=open, label={}];", quote(r), quote(t), quote(&label));
    }
    out.push_str("}\n");
    Ok(out)
}
