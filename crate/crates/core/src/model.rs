//! Specification data model: processes with layered conditions, error
//! injectors, and whole-system checks (validation, rely/guarantee
//! complementarity, layer monotonicity).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::domain::{Decl, State};
use crate::expr::Expr;
use crate::implies::{implies_on_domain, Implication, ImpliesError};
use crate::program::{Program, Stmt, StmtKind};
use crate::span::Span;
use crate::typecheck::{check_predicate, type_check, CheckContext, EpochMode, Ty};

/// One layer of conditions. Layer 0 describes the normal mode; later layers
/// weaken the rely for abnormal modes.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionLayer {
    pub name: String,
    pub rely: Expr,
    pub guarantee: Expr,
    /// Falls back to the layer-0 postcondition when absent.
    pub post: Option<Expr>,
}

#[derive(Clone, Debug)]
pub struct ProcessSpec {
    pub id: String,
    pub pre: Expr,
    pub layers: Vec<ConditionLayer>,
    pub body: Program,
    pub span: Span,
}

impl PartialEq for ProcessSpec {
    fn eq(&self, o: &Self) -> bool {
        self.id == o.id && self.pre == o.pre && self.layers == o.layers && self.body == o.body
    }
}

impl ProcessSpec {
    /// Postcondition owed when layer `i` is active.
    pub fn post(&self, i: usize) -> Expr {
        self.layers
            .get(i)
            .and_then(|l| l.post.clone())
            .or_else(|| self.layers.first().and_then(|l| l.post.clone()))
            .unwrap_or_else(|| Expr::bool(true))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaultKind {
    /// A state update is lost, as if it never happened.
    LostUpdate,
    /// A state update is performed twice.
    DuplicatedUpdate,
    /// A fake update is created from scratch.
    FakeUpdate,
}

impl FaultKind {
    pub const ALL: [FaultKind; 3] = [FaultKind::LostUpdate, FaultKind::DuplicatedUpdate, FaultKind::FakeUpdate];

    pub fn keyword(self) -> &'static str {
        match self {
            FaultKind::LostUpdate => "lost",
            FaultKind::DuplicatedUpdate => "dup",
            FaultKind::FakeUpdate => "fake",
        }
    }

    pub fn from_keyword(s: &str) -> Option<FaultKind> {
        FaultKind::ALL.into_iter().find(|k| k.keyword() == s)
    }
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaultKind::LostUpdate => "LOST_UPDATE",
            FaultKind::DuplicatedUpdate => "DUPLICATED_UPDATE",
            FaultKind::FakeUpdate => "FAKE_UPDATE",
        })
    }
}

/// An error injector: an environment actor whose every firing must satisfy `guarantee`.
#[derive(Clone, Debug)]
pub struct InjectorSpec {
    pub id: String,
    pub kinds: BTreeSet<FaultKind>,
    pub enabling: Expr,
    pub guarantee: Expr,
    /// Maximum number of firings per run; 0 makes the injector inert.
    pub budget: u32,
    pub body: Program,
    pub span: Span,
}

impl PartialEq for InjectorSpec {
    fn eq(&self, o: &Self) -> bool {
        self.id == o.id
            && self.kinds == o.kinds
            && self.enabling == o.enabling
            && self.guarantee == o.guarantee
            && self.budget == o.budget
            && self.body == o.body
    }
}

/// Granularity of atomic units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Atomicity {
    /// Each assignment and each guard evaluation is one unit.
    #[default]
    Statement,
    /// Each top-level statement is one unit, except that a top-level `while`
    /// yields one unit per iteration (guard plus body).
    Block,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub decl: Decl,
    pub init: Expr,
    pub atomicity: Atomicity,
    pub processes: Vec<ProcessSpec>,
    pub injectors: Vec<InjectorSpec>,
}

/// Identifies an actor: processes come first, then injectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActorId(pub usize);

impl SystemSpec {
    pub fn actor_count(&self) -> usize {
        self.processes.len() + self.injectors.len()
    }

    pub fn actor_name(&self, a: ActorId) -> &str {
        if a.0 < self.processes.len() {
            &self.processes[a.0].id
        } else {
            &self.injectors[a.0 - self.processes.len()].id
        }
    }

    pub fn is_injector(&self, a: ActorId) -> bool {
        a.0 >= self.processes.len()
    }

    pub fn process_index(&self, id: &str) -> Option<usize> {
        self.processes.iter().position(|p| p.id == id)
    }

    /// Overrides every injector budget.
    pub fn with_budget(mut self, budget: u32) -> Self {
        for inj in &mut self.injectors {
            inj.budget = budget;
        }
        self
    }

    /// All states of the declaration that satisfy `init` and the optional extra filter.
    pub fn initial_states(&self, filter: Option<&Expr>) -> Result<Vec<State>, crate::eval::EvalError> {
        let mut out = Vec::new();
        for s in crate::domain::all_states(&self.decl) {
            if !crate::eval::eval_state_predicate(&self.init, &self.decl, &s)? {
                continue;
            }
            if let Some(f) = filter {
                if !crate::eval::eval_state_predicate(f, &self.decl, &s)? {
                    continue;
                }
            }
            out.push(s);
        }
        Ok(out)
    }
}

/// A located validation finding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub message: String,
    pub span: Span,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

struct Validator<'a> {
    decl: &'a Decl,
    out: Vec<Diagnostic>,
}

impl Validator<'_> {
    fn pred(&mut self, e: &Expr, ctx: CheckContext, what: &str) {
        if let Err(err) = check_predicate(e, self.decl, ctx) {
            self.out.push(Diagnostic { message: format!("{what}: {}", err.message), span: err.span });
        }
    }

    fn stmts(&mut self, stmts: &[Stmt], history: bool) {
        let ctx = CheckContext { epochs: EpochMode::Single, history };
        for s in stmts {
            match &s.kind {
                StmtKind::Assign { var, expr } => {
                    let Some(slot) = self.decl.slot(var) else {
                        self.out.push(Diagnostic {
                            message: format!("assignment to undeclared variable `{var}`"),
                            span: s.span,
                        });
                        continue;
                    };
                    match type_check(expr, self.decl, ctx) {
                        Ok(t) if t == Ty::of_domain(self.decl, slot) => {}
                        Ok(t) => {
                            self.out.push(Diagnostic { message: format!("cannot assign {t} to `{var}`"), span: s.span })
                        }
                        Err(e) => self.out.push(Diagnostic { message: e.message, span: e.span }),
                    }
                }
                StmtKind::Choose { var } => {
                    if self.decl.slot(var).is_none() {
                        self.out.push(Diagnostic {
                            message: format!("assignment to undeclared variable `{var}`"),
                            span: s.span,
                        });
                    }
                }
                StmtKind::Skip => {}
                StmtKind::While { cond, body } => {
                    self.pred(cond, ctx, "loop guard");
                    self.stmts(body, history);
                }
                StmtKind::If { cond, then_branch, else_branch } => {
                    self.pred(cond, ctx, "branch guard");
                    self.stmts(then_branch, history);
                    self.stmts(else_branch, history);
                }
                StmtKind::Atomic { body } => self.stmts(body, history),
            }
        }
    }
}

/// Checks every structural and typing invariant of a system. Empty output means valid.
pub fn validate_system(sys: &SystemSpec) -> Vec<Diagnostic> {
    let mut v = Validator { decl: &sys.decl, out: Vec::new() };
    for p in sys.decl.problems() {
        v.out.push(Diagnostic { message: p.message.clone(), span: p.span });
    }
    v.pred(&sys.init, CheckContext::SINGLE, "init");
    if sys.processes.is_empty() {
        v.out.push(Diagnostic { message: "a system needs at least one process".into(), span: Span::default() });
    }
    let mut ids: HashSet<&str> = HashSet::new();
    for p in &sys.processes {
        if !ids.insert(&p.id) {
            v.out.push(Diagnostic { message: format!("duplicate actor id `{}`", p.id), span: p.span });
        }
        v.pred(&p.pre, CheckContext::SINGLE, &format!("precondition of `{}`", p.id));
        if p.layers.is_empty() {
            v.out.push(Diagnostic { message: format!("process `{}` has no condition layer", p.id), span: p.span });
        }
        let mut names = HashSet::new();
        for l in &p.layers {
            if !names.insert(&l.name) {
                v.out.push(Diagnostic {
                    message: format!("layer name `{}` repeated in process `{}`", l.name, p.id),
                    span: l.rely.span,
                });
            }
            v.pred(&l.rely, CheckContext::TWO, &format!("rely of `{}`/{}", p.id, l.name));
            v.pred(&l.guarantee, CheckContext::TWO, &format!("guarantee of `{}`/{}", p.id, l.name));
            if let Some(post) = &l.post {
                v.pred(post, CheckContext::SINGLE, &format!("postcondition of `{}`/{}", p.id, l.name));
            }
        }
        v.stmts(&p.body.stmts, false);
    }
    for inj in &sys.injectors {
        if !ids.insert(&inj.id) {
            v.out.push(Diagnostic { message: format!("duplicate actor id `{}`", inj.id), span: inj.span });
        }
        let hist = CheckContext { epochs: EpochMode::Single, history: true };
        v.pred(&inj.enabling, hist, &format!("enabling condition of `{}`", inj.id));
        v.pred(&inj.guarantee, CheckContext::TWO, &format!("guarantee of `{}`", inj.id));
        v.stmts(&inj.body.stmts, true);
    }
    v.out
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown process `{0}`")]
    UnknownProcess(String),
    #[error("process `{process}` has no layer {layer}")]
    UnknownLayer { process: String, layer: usize },
    #[error(transparent)]
    Implies(#[from] ImpliesError),
}

/// Which layer each process is assumed to occupy when it acts as environment.
/// Processes not listed default to layer 0.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LayerSelection(pub HashMap<String, usize>);

impl LayerSelection {
    pub fn layer_of(&self, pid: &str) -> usize {
        self.0.get(pid).copied().unwrap_or(0)
    }
}

/// The strongest condition every environment transition of `pid` satisfies.
///
/// Each environment transition is made by exactly one other actor, so the
/// result is the disjunction of the other processes' selected guarantees and,
/// when `with_injectors` is set, every injector guarantee. With no other
/// actor the environment never moves and the result is `false`.
pub fn environment_guarantee(
    sys: &SystemSpec,
    pid: &str,
    selection: &LayerSelection,
    with_injectors: bool,
) -> Result<Expr, ModelError> {
    if sys.process_index(pid).is_none() {
        return Err(ModelError::UnknownProcess(pid.to_string()));
    }
    let mut parts = Vec::new();
    for q in sys.processes.iter().filter(|q| q.id != pid) {
        let li = selection.layer_of(&q.id);
        let layer = q.layers.get(li).ok_or_else(|| ModelError::UnknownLayer { process: q.id.clone(), layer: li })?;
        parts.push(layer.guarantee.clone());
    }
    if with_injectors {
        parts.extend(sys.injectors.iter().map(|i| i.guarantee.clone()));
    }
    Ok(Expr::or_all(parts))
}

/// Whether layer `layer` of a process with `layer_count` layers must tolerate injectors.
///
/// Layer 0 is the normal mode and faces only the other processes. Abnormal
/// layers face the injectors too; a single-layer process has no abnormal
/// layer, so its only layer faces everything.
pub fn layer_faces_injectors(layer: usize, layer_count: usize) -> bool {
    layer > 0 || layer_count == 1
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplementarityVerdict {
    pub process: String,
    pub layer: usize,
    pub layer_name: String,
    pub result: Implication,
}

/// For each process and layer, checks that the environment guarantee implies the layer's rely.
pub fn check_complementarity(sys: &SystemSpec, cap: u128) -> Result<Vec<ComplementarityVerdict>, ModelError> {
    let selection = LayerSelection::default();
    let mut out = Vec::new();
    for p in &sys.processes {
        for (i, layer) in p.layers.iter().enumerate() {
            let env = environment_guarantee(sys, &p.id, &selection, layer_faces_injectors(i, p.layers.len()))?;
            let result = implies_on_domain(&env, &layer.rely, &sys.decl, cap)?;
            out.push(ComplementarityVerdict {
                process: p.id.clone(),
                layer: i,
                layer_name: layer.name.clone(),
                result,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Monotonicity {
    Holds,
    /// `layers[stronger].rely` does not imply `layers[weaker].rely`.
    Fails {
        stronger: usize,
        weaker: usize,
        before: State,
        after: State,
    },
}

/// Checks that relies weaken down the layer list (each rely implies the next).
pub fn check_layer_monotonicity(ps: &ProcessSpec, decl: &Decl, cap: u128) -> Result<Monotonicity, ModelError> {
    for (i, w) in ps.layers.windows(2).enumerate() {
        if let Implication::Fails { before, after } = implies_on_domain(&w[0].rely, &w[1].rely, decl, cap)? {
            return Ok(Monotonicity::Fails { stronger: i, weaker: i + 1, before, after });
        }
    }
    Ok(Monotonicity::Holds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    const GCD: &str = include_str!("../specs/gcd.rg");
    const COUNTER: &str = include_str!("../specs/counter.rg");
    const CRUISE: &str = include_str!("../specs/cruise.rg");

    fn sys(src: &str) -> SystemSpec {
        parse(src, "test.rg").expect("parses").spec
    }

    #[test]
    fn gcd_validates_clean() {
        assert_eq!(validate_system(&sys(GCD)), vec![]);
    }

    #[test]
    fn undeclared_variable_in_rely_gives_one_diagnostic() {
        let src = "state { x: int[0..1]; } init x = 0;
            process p { pre true; layer normal { rely z = old(z); guarantee true; post true; } body { skip } }";
        let tree = parse(src, "t.rg").unwrap();
        let d = validate_system(&tree.spec);
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(d[0].message.contains("`z`"));
    }

    #[test]
    fn duplicate_process_id_gives_one_diagnostic() {
        let src = "state { x: int[0..1]; } init x = 0;
            process P1 { pre true; layer normal { rely true; guarantee true; post true; } body { skip } }
            process P1 { pre true; layer normal { rely true; guarantee true; post true; } body { skip } }";
        let d = validate_system(&parse(src, "t.rg").unwrap().spec);
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(d[0].message.contains("P1"));
    }

    #[test]
    fn validation_is_idempotent() {
        let s = sys(COUNTER);
        assert_eq!(validate_system(&s), validate_system(&s));
    }

    #[test]
    fn gcd_environment_of_p1_is_g2() {
        let s = sys(GCD);
        let env = environment_guarantee(&s, "P1", &LayerSelection::default(), true).unwrap();
        assert_eq!(env, s.processes[1].layers[0].guarantee);
        assert_eq!(env, s.processes[0].layers[0].rely, "G2 = R1");
    }

    #[test]
    fn counter_environment_is_injector_guarantee() {
        let s = sys(COUNTER);
        let env = environment_guarantee(&s, "C", &LayerSelection::default(), true).unwrap();
        assert_eq!(env, s.injectors[0].guarantee);
        let quiet = environment_guarantee(&s, "C", &LayerSelection::default(), false).unwrap();
        assert_eq!(quiet, Expr::bool(false));
    }

    #[test]
    fn lone_process_faces_no_environment() {
        let src = "state { x: int[0..1]; } init x = 0;
            process p { pre true; layer normal { rely true; guarantee true; post true; } body { skip } }";
        let s = sys(src);
        assert_eq!(environment_guarantee(&s, "p", &LayerSelection::default(), true).unwrap(), Expr::bool(false));
        assert!(matches!(
            environment_guarantee(&s, "q", &LayerSelection::default(), true),
            Err(ModelError::UnknownProcess(_))
        ));
    }

    #[test]
    fn layer_selection_picks_guarantee() {
        let s = sys(GCD);
        let mut sel = LayerSelection::default();
        sel.0.insert("P2".into(), 3);
        assert!(matches!(environment_guarantee(&s, "P1", &sel, true), Err(ModelError::UnknownLayer { .. })));
    }

    #[test]
    fn single_layer_monotonicity_is_vacuous() {
        let s = sys(GCD);
        assert_eq!(check_layer_monotonicity(&s.processes[0], &s.decl, 1_000_000).unwrap(), Monotonicity::Holds);
    }

    #[test]
    fn cruise_layers_weaken() {
        let s = sys(CRUISE);
        assert_eq!(check_layer_monotonicity(&s.processes[0], &s.decl, 1_000_000).unwrap(), Monotonicity::Holds);
        let mut swapped = s.processes[0].clone();
        swapped.layers.reverse();
        match check_layer_monotonicity(&swapped, &s.decl, 1_000_000).unwrap() {
            Monotonicity::Fails { stronger: 0, weaker: 1, after, .. } => {
                let slot = s.decl.slot("sensor").unwrap();
                assert_eq!(s.decl.show(slot, &after.get(slot)), "ERROR");
            }
            other => panic!("{other:?}"),
        }
    }
}
