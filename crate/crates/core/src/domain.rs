//! Variable domains, values and states.
//!
//! Every carrier is finite: integers live in a declared inclusive range, sets
//! are subsets of `0..=max`, and tokens come from a declared enumeration. This
//! is what makes exhaustive implication checking and interleaving exploration
//! possible.

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;

use crate::span::Span;

/// Largest element a [`NatSet`] can hold.
pub const NATSET_MAX: u32 = 63;

/// A finite set of naturals `<= NATSET_MAX`, stored as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NatSet(u64);

impl NatSet {
    pub const EMPTY: NatSet = NatSet(0);

    pub fn from_bits(bits: u64) -> Self {
        NatSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, e: i64) -> bool {
        (0..=NATSET_MAX as i64).contains(&e) && self.0 & (1u64 << e) != 0
    }

    /// Inserts `e`; returns `false` if `e` is outside `0..=NATSET_MAX`.
    pub fn insert(&mut self, e: i64) -> bool {
        if !(0..=NATSET_MAX as i64).contains(&e) {
            return false;
        }
        self.0 |= 1u64 << e;
        true
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn min(self) -> Option<i64> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as i64)
    }

    pub fn max_element(self) -> Option<i64> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros() as i64)
    }

    pub fn iter(self) -> impl Iterator<Item = i64> {
        (0..=NATSET_MAX as i64).filter(move |e| self.contains(*e))
    }
}

impl FromIterator<i64> for NatSet {
    fn from_iter<T: IntoIterator<Item = i64>>(iter: T) -> Self {
        let mut s = NatSet::EMPTY;
        for e in iter {
            s.insert(e);
        }
        s
    }
}

impl fmt::Display for NatSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

/// A runtime value. Tokens are stored as the index of the variant within its enum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Set(NatSet),
    Token(u32),
}

impl Value {
    pub fn as_int(self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_set(self) -> Option<NatSet> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }
}

/// The declared carrier of a state variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Int { lo: i64, hi: i64 },
    Bool,
    NatSet { max: u32 },
    Enum { variants: Vec<String> },
}

impl Domain {
    /// Number of values in the carrier.
    pub fn size(&self) -> u128 {
        match self {
            Domain::Int { lo, hi } if lo <= hi => (*hi as i128 - *lo as i128 + 1) as u128,
            Domain::Int { .. } => 0,
            Domain::Bool => 2,
            Domain::NatSet { max } => 1u128 << (max.min(&NATSET_MAX) + 1),
            Domain::Enum { variants } => variants.len() as u128,
        }
    }

    /// Enumerates the carrier in ascending order.
    pub fn values(&self) -> Box<dyn Iterator<Item = Value> + '_> {
        match self {
            Domain::Int { lo, hi } => Box::new((*lo..=*hi).map(Value::Int)),
            Domain::Bool => Box::new([false, true].into_iter().map(Value::Bool)),
            Domain::NatSet { max } => {
                let m = (*max).min(NATSET_MAX);
                let top: u64 = if m == 63 { u64::MAX } else { (1u64 << (m + 1)) - 1 };
                Box::new((0..=top).map(|b| Value::Set(NatSet::from_bits(b))))
            }
            Domain::Enum { variants } => Box::new((0..variants.len() as u32).map(Value::Token)),
        }
    }

    /// Smallest value of the carrier, used to pad unconstrained variables.
    pub fn first(&self) -> Option<Value> {
        self.values().next()
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Int { lo, hi }, Value::Int(x)) => lo <= x && x <= hi,
            (Domain::Bool, Value::Bool(_)) => true,
            (Domain::NatSet { max }, Value::Set(s)) => s.max_element().map_or(true, |m| m <= *max as i64),
            (Domain::Enum { variants }, Value::Token(t)) => (*t as usize) < variants.len(),
            _ => false,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Int { lo, hi } => write!(f, "int[{lo}..{hi}]"),
            Domain::Bool => f.write_str("bool"),
            Domain::NatSet { max } => write!(f, "natset({max})"),
            Domain::Enum { variants } => write!(f, "enum{{{}}}", variants.join(", ")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VarDecl {
    pub name: String,
    pub domain: Domain,
    /// Display name in the source notation, e.g. `n'` for `n_p`.
    pub alias: Option<String>,
    pub span: Span,
}

impl PartialEq for VarDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.domain == other.domain && self.alias == other.alias
    }
}

/// A problem found while assembling a declaration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeclProblem {
    pub message: String,
    pub span: Span,
}

/// The variable-domain declaration of a system: ordered variables plus the
/// enum-token index derived from them.
#[derive(Clone, Debug, Default)]
pub struct Decl {
    vars: IndexMap<String, VarDecl>,
    /// Distinct enum types, identified by their variant lists.
    enums: Vec<Vec<String>>,
    /// Token name -> (enum id, variant index).
    tokens: HashMap<String, (usize, u32)>,
    problems: Vec<DeclProblem>,
}

impl PartialEq for Decl {
    fn eq(&self, other: &Self) -> bool {
        self.vars.len() == other.vars.len() && self.vars.values().zip(other.vars.values()).all(|(a, b)| a == b)
    }
}

impl Decl {
    /// Builds a declaration. Malformed entries are kept and reported through
    /// [`Decl::problems`] so that validation can surface every issue at once.
    pub fn new(vars: impl IntoIterator<Item = VarDecl>) -> Self {
        let mut decl = Decl::default();
        for v in vars {
            match &v.domain {
                Domain::Int { lo, hi } if lo > hi => decl.problems.push(DeclProblem {
                    message: format!("variable `{}` has empty range {}..{}", v.name, lo, hi),
                    span: v.span,
                }),
                Domain::NatSet { max } if *max > NATSET_MAX => decl.problems.push(DeclProblem {
                    message: format!("variable `{}`: natset max {} exceeds {}", v.name, max, NATSET_MAX),
                    span: v.span,
                }),
                Domain::Enum { variants } => {
                    if variants.is_empty() {
                        decl.problems.push(DeclProblem {
                            message: format!("variable `{}` has an empty enum", v.name),
                            span: v.span,
                        });
                    }
                    let id = match decl.enums.iter().position(|e| e == variants) {
                        Some(id) => id,
                        None => {
                            decl.enums.push(variants.clone());
                            decl.enums.len() - 1
                        }
                    };
                    for (i, tok) in variants.iter().enumerate() {
                        match decl.tokens.get(tok) {
                            Some(&(other, _)) if other != id => decl.problems.push(DeclProblem {
                                message: format!("token `{tok}` is declared by two different enums"),
                                span: v.span,
                            }),
                            Some(&(_, idx)) if idx != i as u32 => decl.problems.push(DeclProblem {
                                message: format!("token `{tok}` repeated in enum of `{}`", v.name),
                                span: v.span,
                            }),
                            _ => {
                                decl.tokens.insert(tok.clone(), (id, i as u32));
                            }
                        }
                    }
                }
                _ => {}
            }
            if decl.vars.contains_key(&v.name) {
                decl.problems
                    .push(DeclProblem { message: format!("variable `{}` declared twice", v.name), span: v.span });
                continue;
            }
            decl.vars.insert(v.name.clone(), v);
        }
        for name in decl.vars.keys() {
            if decl.tokens.contains_key(name) {
                let span = decl.vars[name].span;
                decl.problems
                    .push(DeclProblem { message: format!("`{name}` is both a variable and an enum token"), span });
            }
        }
        decl
    }

    /// Convenience constructor for programmatic declarations.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Domain)>) -> Self {
        Decl::new(pairs.into_iter().map(|(n, d)| VarDecl {
            name: n.to_string(),
            domain: d,
            alias: None,
            span: Span::default(),
        }))
    }

    pub fn problems(&self) -> &[DeclProblem] {
        &self.problems
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.vars.get_index_of(name)
    }

    pub fn var(&self, slot: usize) -> &VarDecl {
        &self.vars[slot]
    }

    pub fn get(&self, name: &str) -> Option<&VarDecl> {
        self.vars.get(name)
    }

    pub fn vars(&self) -> impl Iterator<Item = &VarDecl> {
        self.vars.values()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.keys().map(String::as_str)
    }

    /// Resolves a token name to `(enum id, variant index)`.
    pub fn token(&self, name: &str) -> Option<(usize, u32)> {
        self.tokens.get(name).copied()
    }

    pub fn is_token(&self, name: &str) -> bool {
        self.tokens.contains_key(name)
    }

    /// Enum id of an enum-typed variable.
    pub fn enum_id_of(&self, slot: usize) -> Option<usize> {
        match &self.vars[slot].domain {
            Domain::Enum { variants } => self.enums.iter().position(|e| e == variants),
            _ => None,
        }
    }

    pub fn enum_variants(&self, id: usize) -> &[String] {
        &self.enums[id]
    }

    /// Renders a value held by variable `slot`.
    pub fn show(&self, slot: usize, v: &Value) -> String {
        match (v, &self.vars[slot].domain) {
            (Value::Token(t), Domain::Enum { variants }) => {
                variants.get(*t as usize).cloned().unwrap_or_else(|| format!("#{t}"))
            }
            (v, _) => show_plain(v),
        }
    }

    /// Size of the full state space (product of carrier sizes), saturating.
    pub fn state_space(&self) -> u128 {
        self.vars.values().fold(1u128, |acc, v| acc.saturating_mul(v.domain.size()))
    }
}

pub(crate) fn show_plain(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Set(s) => s.to_string(),
        Value::Token(t) => format!("#{t}"),
    }
}

/// A global state: one value per declared variable, in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(pub Vec<Value>);

impl State {
    pub fn get(&self, slot: usize) -> Value {
        self.0[slot]
    }

    pub fn set(&mut self, slot: usize, v: Value) {
        self.0[slot] = v;
    }

    /// Checks that every declared variable is present and inside its carrier.
    pub fn conforms_to(&self, decl: &Decl) -> bool {
        self.0.len() == decl.len() && decl.vars().zip(&self.0).all(|(d, v)| d.domain.contains(v))
    }

    /// Builds a state from named values; every declared variable must be given.
    pub fn from_named(decl: &Decl, values: &[(&str, Value)]) -> Result<State, String> {
        let mut slots: Vec<Option<Value>> = vec![None; decl.len()];
        for (name, v) in values {
            let slot = decl.slot(name).ok_or_else(|| format!("undeclared variable `{name}`"))?;
            if !decl.var(slot).domain.contains(v) {
                return Err(format!("value {} out of domain for `{name}`", show_plain(v)));
            }
            slots[slot] = Some(*v);
        }
        let values = slots
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| format!("missing value for `{}`", decl.var(i).name)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(State(values))
    }

    pub fn display<'a>(&'a self, decl: &'a Decl) -> StateDisplay<'a> {
        StateDisplay { state: self, decl }
    }

    /// Slots whose value differs between `self` and `other`.
    pub fn diff(&self, other: &State) -> Vec<usize> {
        self.0.iter().zip(&other.0).enumerate().filter(|(_, (a, b))| a != b).map(|(i, _)| i).collect()
    }
}

pub struct StateDisplay<'a> {
    state: &'a State,
    decl: &'a Decl,
}

impl fmt::Display for StateDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.state.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}={}", self.decl.var(i).name, self.decl.show(i, v))?;
        }
        f.write_str("}")
    }
}

/// Enumerates every state of `decl` in lexicographic order (first variable slowest).
pub fn all_states(decl: &Decl) -> impl Iterator<Item = State> + '_ {
    let carriers: Vec<Vec<Value>> = decl.vars().map(|v| v.domain.values().collect()).collect();
    let empty = carriers.iter().any(Vec::is_empty);
    let mut idx = vec![0usize; carriers.len()];
    let mut done = empty;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let s = State(idx.iter().zip(&carriers).map(|(&i, c)| c[i]).collect());
        // odometer increment, last variable fastest
        let mut k = carriers.len();
        loop {
            if k == 0 {
                done = true;
                break;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < carriers[k].len() {
                break;
            }
            idx[k] = 0;
        }
        Some(s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natset_basics() {
        let s: NatSet = [3, 5, 7].into_iter().collect();
        assert_eq!(s.len(), 3);
        assert_eq!(s.min(), Some(3));
        assert_eq!(s.max_element(), Some(7));
        assert!(s.contains(5) && !s.contains(4) && !s.contains(-1) && !s.contains(99));
        assert_eq!(s.to_string(), "{3, 5, 7}");
        assert_eq!(NatSet::EMPTY.min(), None);
    }

    #[test]
    fn domain_sizes_and_values() {
        assert_eq!(Domain::Int { lo: -2, hi: 2 }.size(), 5);
        assert_eq!(Domain::NatSet { max: 6 }.size(), 128);
        assert_eq!(Domain::NatSet { max: 6 }.values().count(), 128);
        assert_eq!(Domain::Int { lo: 3, hi: 1 }.size(), 0);
        let e = Domain::Enum { variants: vec!["OK".into(), "ERROR".into()] };
        assert_eq!(e.values().collect::<Vec<_>>(), vec![Value::Token(0), Value::Token(1)]);
    }

    #[test]
    fn decl_reports_problems() {
        let d = Decl::from_pairs([
            ("x", Domain::Int { lo: 1, hi: 0 }),
            ("x", Domain::Bool),
            ("m", Domain::Enum { variants: vec!["OK".into()] }),
            ("k", Domain::Enum { variants: vec!["OK".into(), "BAD".into()] }),
        ]);
        assert_eq!(d.problems().len(), 3, "{:?}", d.problems());
    }

    #[test]
    fn all_states_enumerates_product() {
        let d = Decl::from_pairs([("a", Domain::Int { lo: 0, hi: 2 }), ("b", Domain::Bool)]);
        let states: Vec<_> = all_states(&d).collect();
        assert_eq!(states.len(), 6);
        assert_eq!(states[0], State(vec![Value::Int(0), Value::Bool(false)]));
        assert_eq!(states[1], State(vec![Value::Int(0), Value::Bool(true)]));
        assert_eq!(states[5], State(vec![Value::Int(2), Value::Bool(true)]));
    }

    #[test]
    fn state_from_named_requires_all() {
        let d = Decl::from_pairs([("a", Domain::Int { lo: 0, hi: 2 }), ("b", Domain::Bool)]);
        assert!(State::from_named(&d, &[("a", Value::Int(1))]).is_err());
        assert!(State::from_named(&d, &[("a", Value::Int(9)), ("b", Value::Bool(true))]).is_err());
        let s = State::from_named(&d, &[("b", Value::Bool(true)), ("a", Value::Int(1))]).unwrap();
        assert_eq!(s.display(&d).to_string(), "{a=1, b=true}");
    }
}
